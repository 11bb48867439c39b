#include "fastgate/species.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fastgate/constants.hpp"

namespace fastgate {

void SpeciesSpec::validate() const {
    if (!(mass > 0.0))
        throw std::domain_error("species '" + name + "': mass must be > 0");
    if (!(raman_wavelength > 0.0))
        throw std::domain_error("species '" + name + "': wavelength must be > 0");
}

SpeciesSpec make_species(const std::string& name, double mass_amu, double wavelength_nm) {
    SpeciesSpec s{name, mass_amu * atomic_mass_unit, wavelength_nm * 1e-9};
    s.validate();
    return s;
}

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<SpeciesSpec>& overrides() {
    static std::vector<SpeciesSpec> table;
    return table;
}

}  // namespace

const std::vector<SpeciesSpec>& builtin_species() {
    // Masses: AME2020 atomic masses (amu). Wavelengths: Raman drives used
    // for SDKs on each species (532 nm Ba, 393 nm Ca, 369.5 nm Yb,
    // 408 nm Sr, 313 nm Be).
    static const std::vector<SpeciesSpec> table = {
        make_species("ba133", 132.906007, 532.0),
        make_species("ba138", 137.905247, 532.0),
        make_species("ca43", 42.958766, 393.0),
        make_species("ca40", 39.962591, 393.0),
        make_species("sr88", 87.905612, 408.0),
        make_species("yb171", 170.936330, 369.5),
        make_species("be9", 9.012183, 313.0),
    };
    return table;
}

SpeciesSpec lookup_species(const std::string& name) {
    const std::string key = to_lower(name);
    for (const auto& s : overrides())
        if (to_lower(s.name) == key) return s;
    for (const auto& s : builtin_species())
        if (to_lower(s.name) == key) return s;
    throw std::out_of_range("unknown species '" + name + "'");
}

std::vector<SpeciesSpec> load_species_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open species table '" + path + "'");
    std::vector<SpeciesSpec> loaded;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        std::string name;
        if (!(row >> name)) continue;  // blank / comment-only line
        double mass_amu = 0.0, wavelength_nm = 0.0;
        if (!(row >> mass_amu >> wavelength_nm))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'name mass_amu wavelength_nm'");
        loaded.push_back(make_species(name, mass_amu, wavelength_nm));
    }
    for (const auto& s : loaded) {
        auto& table = overrides();
        auto it = std::find_if(table.begin(), table.end(), [&](const SpeciesSpec& e) {
            return to_lower(e.name) == to_lower(s.name);
        });
        if (it != table.end())
            *it = s;
        else
            table.push_back(s);
    }
    return loaded;
}

void clear_species_overrides() { overrides().clear(); }

}  // namespace fastgate
