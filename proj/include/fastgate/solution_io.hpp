#pragma once

#include <map>
#include <optional>
#include <string>

#include "fastgate/gate_dynamics.hpp"
#include "fastgate/robustness.hpp"

namespace fastgate {

inline constexpr const char* tool_version = "fastgate 1.0.0";
inline constexpr const char* solution_schema = "fastgate-solution/1";
inline constexpr const char* sweep_schema = "fastgate-sweep/1";
inline constexpr const char* pareto_schema = "fastgate-pareto/1";

// Provenance attached to every output file. wall_clock_s is reported on
// stderr and stored in JSON outputs only; CSV outputs must be
// byte-identical across reruns with the same seed, so it is omitted there.
struct RunManifest {
    std::string command;                            // subcommand + arguments
    std::string config;                             // resolved config, one line
    std::uint64_t seed = 0;
    double wall_clock_s = 0.0;
    std::map<std::string, std::string> input_hashes;  // file -> fnv1a hex
};

// FNV-1a (64 bit) of a file's bytes, hex encoded. Throws on I/O failure.
std::string file_hash(const std::string& path);

std::string solution_to_json(const GateSolution& sol, const RunManifest& manifest);
void save_solution(const std::string& path, const GateSolution& sol,
                   const RunManifest& manifest);

struct LoadedSolution {
    GateSolution solution;
    RunManifest manifest;
};
// Throws std::runtime_error on malformed or schema-mismatched documents.
LoadedSolution load_solution(const std::string& path);

// CSV with '#' manifest header; numbers at 17 significant digits.
// Columns: magnitude,mean_error,std_error,phase_term,motional_term
std::string sweep_to_csv(const SweepResult& sweep, const RunManifest& manifest);

struct ParetoRow {
    double gate_time_requested = 0.0;
    double gate_time = 0.0;
    int n_sdks = 0;
    double infidelity = 0.0;
    double rescaled_gate_time = 0.0;
    double rescaled_n_sdks = 0.0;
};
// Columns: gate_time_requested,gate_time,n_sdks,infidelity,
//          rescaled_gate_time,rescaled_n_sdks
std::string pareto_to_csv(const std::vector<ParetoRow>& rows, const RunManifest& manifest);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace fastgate
