#include "fastgate/solution_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fastgate/constants.hpp"
#include "fastgate/oracle.hpp"

namespace fastgate {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json species_to_json(const SpeciesSpec& s) {
    // SI fields are authoritative on load (exact round trip); the amu/nm
    // duplicates are for humans
    return json{{"name", s.name},
                {"mass_amu", s.mass / atomic_mass_unit},
                {"mass_kg", s.mass},
                {"wavelength_nm", s.raman_wavelength * 1e9},
                {"wavelength_m", s.raman_wavelength}};
}

SpeciesSpec species_from_json(const json& j) {
    SpeciesSpec s;
    s.name = j.at("name").get<std::string>();
    if (j.contains("mass_kg"))
        s.mass = j.at("mass_kg").get<double>();
    else
        s.mass = j.at("mass_amu").get<double>() * atomic_mass_unit;
    if (j.contains("wavelength_m"))
        s.raman_wavelength = j.at("wavelength_m").get<double>();
    else
        s.raman_wavelength = j.at("wavelength_nm").get<double>() * 1e-9;
    s.validate();
    return s;
}

json complex_to_json(const complexd& c) { return json::array({c.real(), c.imag()}); }

complexd complex_from_json(const json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json manifest_to_json(const RunManifest& m, bool with_wall_clock) {
    json j{{"command", m.command}, {"config", m.config}, {"seed", m.seed}};
    if (with_wall_clock) j["wall_clock_s"] = m.wall_clock_s;
    j["input_hashes"] = m.input_hashes;
    return j;
}

void manifest_header(std::ostringstream& out, const std::string& schema,
                     const RunManifest& m) {
    out << "# schema: " << schema << "\n";
    out << "# tool: " << tool_version << "\n";
    if (!m.command.empty()) out << "# command: " << m.command << "\n";
    if (!m.config.empty()) out << "# config: " << m.config << "\n";
    out << "# seed: " << m.seed << "\n";
    for (const auto& [file, hash] : m.input_hashes)
        out << "# input: " << file << " fnv1a=" << hash << "\n";
}

}  // namespace

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for hashing");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string solution_to_json(const GateSolution& sol, const RunManifest& manifest) {
    json j;
    j["schema"] = solution_schema;
    j["tool_version"] = tool_version;
    j["manifest"] = manifest_to_json(manifest, true);
    j["trap"] = {{"ion1", species_to_json(sol.trap.ion1)},
                 {"ion2", species_to_json(sol.trap.ion2)},
                 {"omega0_ion1", sol.trap.omega0_ion1},
                 {"beam_tilt", sol.trap.beam_tilt}};
    j["nbar"] = sol.nbar;
    j["sequence"] = {{"times", sol.sequence.times},
                     {"directions", sol.sequence.directions}};
    j["search"] = {{"seed", sol.search.seed},
                   {"n_max", sol.search.n_max},
                   {"group_z", sol.search.group_z},
                   {"group_centers", sol.search.group_centers},
                   {"min_separation", sol.search.min_separation},
                   {"converged", sol.search.converged},
                   {"bandwidth_limited", sol.search.bandwidth_limited},
                   {"cost_history", sol.search.cost_history}};
    const NormalModes modes = normal_modes(sol.trap);
    const auto residual = sol.sequence.size()
                              ? motional_restoration_residual(sol.sequence, modes)
                              : std::array<double, 2>{0.0, 0.0};
    j["results"] = {
        {"theta", sol.theta},
        {"beta_plus", {complex_to_json(sol.beta_plus[0]), complex_to_json(sol.beta_plus[1])}},
        {"beta_minus",
         {complex_to_json(sol.beta_minus[0]), complex_to_json(sol.beta_minus[1])}},
        {"infidelity", sol.infidelity},
        {"restoration_residual", residual},
        {"gate_time", sol.gate_time()},
        {"n_sdks", sol.n_sdks()}};
    return j.dump(2) + "\n";
}

void save_solution(const std::string& path, const GateSolution& sol,
                   const RunManifest& manifest) {
    write_text_file(path, solution_to_json(sol, manifest));
}

LoadedSolution load_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open solution file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed JSON in '" + path + "': " + e.what());
    }
    try {
        if (j.at("schema").get<std::string>() != solution_schema)
            throw std::runtime_error("unsupported schema in '" + path + "'");
        LoadedSolution out;
        GateSolution& sol = out.solution;
        const json& trap = j.at("trap");
        sol.trap.ion1 = species_from_json(trap.at("ion1"));
        sol.trap.ion2 = species_from_json(trap.at("ion2"));
        sol.trap.omega0_ion1 = trap.at("omega0_ion1").get<double>();
        sol.trap.beam_tilt = trap.at("beam_tilt").get<double>();
        sol.trap.validate();
        j.at("nbar").get_to(sol.nbar);
        j.at("sequence").at("times").get_to(sol.sequence.times);
        j.at("sequence").at("directions").get_to(sol.sequence.directions);
        sol.sequence.validate_expanded();
        const json& search = j.at("search");
        sol.search.seed = search.at("seed").get<std::uint64_t>();
        sol.search.n_max = search.at("n_max").get<int>();
        search.at("group_z").get_to(sol.search.group_z);
        search.at("group_centers").get_to(sol.search.group_centers);
        sol.search.min_separation = search.at("min_separation").get<double>();
        sol.search.converged = search.at("converged").get<bool>();
        sol.search.bandwidth_limited = search.at("bandwidth_limited").get<bool>();
        search.at("cost_history").get_to(sol.search.cost_history);
        const json& results = j.at("results");
        sol.theta = results.at("theta").get<double>();
        for (int a = 0; a < 2; ++a) {
            sol.beta_plus[a] = complex_from_json(results.at("beta_plus").at(a));
            sol.beta_minus[a] = complex_from_json(results.at("beta_minus").at(a));
        }
        sol.infidelity = results.at("infidelity").get<double>();
        const json& manifest = j.at("manifest");
        out.manifest.command = manifest.value("command", "");
        out.manifest.config = manifest.value("config", "");
        out.manifest.seed = manifest.value("seed", std::uint64_t{0});
        out.manifest.wall_clock_s = manifest.value("wall_clock_s", 0.0);
        if (manifest.contains("input_hashes"))
            manifest.at("input_hashes").get_to(out.manifest.input_hashes);
        return out;
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid solution document '" + path + "': " + e.what());
    }
}

std::string sweep_to_csv(const SweepResult& sweep, const RunManifest& manifest) {
    std::ostringstream out;
    manifest_header(out, sweep_schema, manifest);
    out << "magnitude,mean_error,std_error,phase_term,motional_term\n";
    for (const auto& p : sweep.points)
        out << fmt17(p.magnitude) << ',' << fmt17(p.mean_error) << ','
            << fmt17(p.std_error) << ',' << fmt17(p.phase_term) << ','
            << fmt17(p.motional_term) << "\n";
    return out.str();
}

std::string pareto_to_csv(const std::vector<ParetoRow>& rows, const RunManifest& manifest) {
    std::ostringstream out;
    manifest_header(out, pareto_schema, manifest);
    out << "gate_time_requested,gate_time,n_sdks,infidelity,rescaled_gate_time,"
           "rescaled_n_sdks\n";
    for (const auto& r : rows)
        out << fmt17(r.gate_time_requested) << ',' << fmt17(r.gate_time) << ','
            << r.n_sdks << ',' << fmt17(r.infidelity) << ','
            << fmt17(r.rescaled_gate_time) << ',' << fmt17(r.rescaled_n_sdks) << "\n";
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

}  // namespace fastgate
