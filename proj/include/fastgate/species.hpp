#pragma once

#include <string>
#include <vector>

namespace fastgate {

// An ion species/isotope used as one half of a two-ion crystal.
// Masses are stored in kg (converted from amu once, at the config boundary);
// raman_wavelength is the transition wavelength lambda = 2*pi/k in metres.
struct SpeciesSpec {
    std::string name;
    double mass = 0.0;              // kg
    double raman_wavelength = 0.0;  // m

    void validate() const;  // throws std::domain_error on non-physical values
};

SpeciesSpec make_species(const std::string& name, double mass_amu, double wavelength_nm);

// Built-in isotope table (masses from standard atomic-mass tables, >= 6
// significant figures; Raman wavelengths as used for SDK drives).
const std::vector<SpeciesSpec>& builtin_species();

// Case-insensitive lookup, e.g. "ca43", "Ba133". Throws std::out_of_range
// for unknown names. If a table has been loaded via load_species_table()
// (or the FASTGATE_SPECIES_TABLE environment variable at CLI startup),
// loaded entries take precedence over built-ins.
SpeciesSpec lookup_species(const std::string& name);

// Species config file: one entry per line, whitespace separated,
//   name  mass_amu  wavelength_nm
// '#' starts a comment. Entries override built-ins of the same name.
// Returns the parsed entries and registers them for lookup_species().
std::vector<SpeciesSpec> load_species_table(const std::string& path);

// Drop all loaded entries (lookups fall back to built-ins). Mainly for tests.
void clear_species_overrides();

}  // namespace fastgate
