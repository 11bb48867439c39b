// fastgate: design and analyze fast mixed-species trapped-ion entangling
// gates from spin-dependent-kick pulse trains.
//
// Subcommands: solve, evaluate, sweep, pareto (and oracle-check).
// Exit codes: 0 success, 2 best-effort non-convergence, 64 usage error,
// 65 data error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "fastgate/oracle.hpp"
#include "fastgate/optimizer.hpp"
#include "fastgate/robustness.hpp"
#include "fastgate/solution_io.hpp"

using namespace fastgate;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_best_effort = 2;
constexpr int exit_usage = 64;
constexpr int exit_data = 65;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_grid(const std::string& text) {
    // "from:to:log20" | "from:to:lin20" | single value
    std::vector<double> grid;
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) {
        try {
            grid.push_back(std::stod(text));
        } catch (...) {
            throw UsageError("bad grid '" + text + "'");
        }
        return grid;
    }
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos) throw UsageError("bad grid '" + text + "'");
    double from = 0.0, to = 0.0;
    std::string scale = text.substr(c2 + 1);
    try {
        from = std::stod(text.substr(0, c1));
        to = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    } catch (...) {
        throw UsageError("bad grid '" + text + "'");
    }
    bool log_scale = false;
    if (scale.rfind("log", 0) == 0)
        log_scale = true;
    else if (scale.rfind("lin", 0) != 0)
        throw UsageError("grid scale must be linN or logN");
    int n = 0;
    try {
        n = std::stoi(scale.substr(3));
    } catch (...) {
        throw UsageError("bad grid point count in '" + text + "'");
    }
    if (n < 1) throw UsageError("empty grid");
    if (log_scale && (from <= 0.0 || to <= 0.0))
        throw UsageError("log grid needs positive endpoints");
    for (int i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : double(i) / double(n - 1);
        grid.push_back(log_scale ? from * std::pow(to / from, f)
                                 : from + (to - from) * f);
    }
    return grid;
}

TrapSetup trap_from_pair(const std::string& pair, double omega0, double tilt) {
    const auto dash = pair.find('-');
    if (dash == std::string::npos)
        throw UsageError("pair must look like 'ca43-sr88' (ion 1 first)");
    try {
        return TrapSetup{lookup_species(pair.substr(0, dash)),
                         lookup_species(pair.substr(dash + 1)), omega0, tilt};
    } catch (const std::out_of_range& e) {
        throw UsageError(e.what());
    }
}

std::string join_args(int argc, char** argv) {
    std::ostringstream out;
    for (int i = 1; i < argc; ++i) out << (i > 1 ? " " : "") << argv[i];
    return out.str();
}

std::string describe_config(const SearchConfig& cfg) {
    std::ostringstream out;
    out << "pair=" << cfg.trap.ion1.name << "-" << cfg.trap.ion2.name
        << " omega0=" << cfg.trap.omega0_ion1 << " tilt=" << cfg.trap.beam_tilt
        << " gate_time=" << cfg.gate_time << " groups=" << cfg.n_groups << ".."
        << cfg.n_groups_max << " z_max=" << cfg.z_max << " min_sep=" << cfg.min_separation
        << " ensemble=" << cfg.ensemble_size << " target=" << cfg.target_infidelity
        << " nmax<=" << cfg.nmax_ceiling << " step=" << cfg.nmax_step
        << " nbar=" << cfg.nbar[0] << "," << cfg.nbar[1]
        << (cfg.j1_multiplicative ? " j1=multiplicative" : " j1=additive");
    return out.str();
}

int cmd_solve(const SearchConfig& cfg, const std::string& out_path,
              const std::string& command, const std::string& species_table) {
    const auto t0 = std::chrono::steady_clock::now();
    const GateSolution sol = search(cfg, [](const std::string& line) {
        std::cerr << "[solve] " << line << "\n";
    });
    RunManifest manifest;
    manifest.command = command;
    manifest.config = describe_config(cfg);
    manifest.seed = cfg.seed;
    manifest.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!species_table.empty())
        manifest.input_hashes["species_table"] = file_hash(species_table);
    if (!out_path.empty()) save_solution(out_path, sol, manifest);

    std::cout << "pair        " << cfg.trap.ion1.name << "-" << cfg.trap.ion2.name << "\n"
              << "tau_G       " << sol.gate_time() * 1e6 << " us (requested "
              << cfg.gate_time * 1e6 << " us)\n"
              << "N_SDK       " << sol.n_sdks() << "\n"
              << "infidelity  " << sol.infidelity << "\n"
              << "Theta       " << sol.theta << "\n"
              << "status      " << (sol.search.converged ? "converged" : "best-effort")
              << "\n";
    return sol.search.converged ? exit_ok : exit_best_effort;
}

int cmd_evaluate(const std::string& path, bool with_oracle) {
    LoadedSolution loaded;
    try {
        loaded = load_solution(path);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    const GateSolution& stored = loaded.solution;
    const GateSolution fresh = reevaluate(stored);

    double beta_diff = 0.0;
    for (int a = 0; a < 2; ++a) {
        beta_diff = std::max(beta_diff, std::abs(fresh.beta_plus[a] - stored.beta_plus[a]));
        beta_diff =
            std::max(beta_diff, std::abs(fresh.beta_minus[a] - stored.beta_minus[a]));
    }
    const double theta_diff = std::abs(fresh.theta - stored.theta);
    const double eps_diff = std::abs(fresh.infidelity - stored.infidelity);

    std::cout << "sequence    N=" << stored.n_sdks() << " tau_G=" << stored.gate_time() * 1e6
              << " us\n"
              << "stored      eps=" << stored.infidelity << " Theta=" << stored.theta << "\n"
              << "recomputed  eps=" << fresh.infidelity << " Theta=" << fresh.theta << "\n"
              << "drift       |dTheta|=" << theta_diff << " |dbeta|=" << beta_diff
              << " |deps|=" << eps_diff << "\n";

    if (with_oracle) {
        const NormalModes modes = normal_modes(stored.trap);
        const auto br = oracle::propagate_branches(stored.sequence, modes);
        double worst = std::abs(fresh.theta - wrap_angle(br.relative_phase()));
        for (int a = 0; a < 2; ++a) {
            worst = std::max(worst, std::abs(fresh.beta_plus[a] -
                                             br.amplitudes[oracle::branch_uu][a]));
            worst = std::max(worst, std::abs(fresh.beta_minus[a] -
                                             br.amplitudes[oracle::branch_du][a]));
        }
        std::cout << "oracle      max discrepancy " << worst << "\n";
        if (worst > 1e-10) {
            std::cout << "WARNING: oracle and analytic paths disagree\n";
            return exit_data;
        }
    }
    if (theta_diff > 1e-12 || eps_diff > 1e-12 || beta_diff > 1e-12)
        std::cout << "WARNING: stored values differ from the recomputed sequence "
                     "(stale or edited file)\n";
    return exit_ok;
}

int cmd_sweep(const std::string& solution_path, const std::string& kind_name,
              const std::string& grid_text, const std::string& preset, int samples,
              std::uint64_t seed, bool resample, unsigned threads,
              const std::string& out_path, const std::string& command) {
    LoadedSolution loaded;
    try {
        loaded = load_solution(solution_path);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }

    std::string kind = kind_name;
    std::vector<double> grid;
    if (!preset.empty()) {
        if (preset == "fig1e") {  // jitter, sub-ns to ns
            kind = "jitter";
            grid = parse_grid("1e-11:2e-9:log20");
            samples = 10000;
        } else if (preset == "fig1g") {  // op-mode drift, kHz scale
            kind = "op_drift";
            grid = parse_grid("-31416:31416:lin41");
        } else if (preset == "figS3") {  // common drift
            kind = "common_drift";
            grid = parse_grid("-31416:31416:lin41");
        } else if (preset == "figS4") {  // repetition-rate drift
            kind = "reprate";
            grid = parse_grid("-0.1:0.1:lin41");
        } else {
            throw UsageError("unknown preset '" + preset + "'");
        }
    } else {
        if (grid_text.empty()) throw UsageError("sweep needs --grid or --preset");
        grid = parse_grid(grid_text);
    }
    if (grid.empty()) throw UsageError("empty grid");

    NoiseSpec spec;
    spec.n_samples = samples;
    spec.seed = seed;
    spec.resample = resample;
    spec.threads = threads;
    spec.min_separation = loaded.solution.search.min_separation;

    SweepResult sweep;
    if (kind == "jitter") {
        spec.kind = NoiseKind::timing_jitter;
        sweep = jitter_sweep(loaded.solution, grid, spec);
    } else if (kind == "op_drift") {
        sweep = frequency_drift_sweep(loaded.solution, DriftMode::op_only, grid);
    } else if (kind == "common_drift") {
        sweep = frequency_drift_sweep(loaded.solution, DriftMode::common, grid);
    } else if (kind == "reprate") {
        sweep = reprate_drift_sweep(loaded.solution, grid);
    } else {
        throw UsageError("unknown sweep kind '" + kind + "'");
    }

    RunManifest manifest;
    manifest.command = command;
    std::ostringstream cfg;
    cfg << "kind=" << kind << " samples=" << samples << " points=" << grid.size()
        << " resample=" << (resample ? 1 : 0)
        << " min_separation=" << spec.min_separation;
    manifest.config = cfg.str();
    manifest.seed = seed;
    manifest.input_hashes[solution_path] = file_hash(solution_path);

    const std::string csv = sweep_to_csv(sweep, manifest);
    if (out_path.empty())
        std::cout << csv;
    else
        write_text_file(out_path, csv);
    return exit_ok;
}

int cmd_pareto(const SearchConfig& base, const std::string& grid_text,
               const std::string& out_path, const std::string& command) {
    const auto grid = parse_grid(grid_text);
    if (grid.empty()) throw UsageError("empty gate-time grid");
    std::vector<ParetoRow> rows;
    std::vector<GateSolution> found;
    for (double tau : grid) {
        SearchConfig cfg = base;
        cfg.gate_time = tau;
        std::cerr << "[pareto] tau_G = " << tau * 1e6 << " us\n";
        const GateSolution sol = search(cfg, [](const std::string& line) {
            std::cerr << "[pareto]   " << line << "\n";
        });
        if (!sol.search.converged || sol.infidelity > 1e-3) {
            std::cerr << "[pareto]   no frontier point (best eps " << sol.infidelity
                      << ")\n";
            continue;
        }
        const auto rescaled = universal_rescale({&sol, 1});
        rows.push_back({tau, sol.gate_time(), int(sol.n_sdks()), sol.infidelity,
                        rescaled[0].rescaled_gate_time, rescaled[0].rescaled_n_sdks});
        found.push_back(sol);
    }
    RunManifest manifest;
    manifest.command = command;
    manifest.config = describe_config(base) + " grid=" + grid_text;
    manifest.seed = base.seed;
    const std::string csv = pareto_to_csv(rows, manifest);
    if (out_path.empty())
        std::cout << csv;
    else
        write_text_file(out_path, csv);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fast mixed-species trapped-ion gate design"};
    app.require_subcommand(1);
    const std::string command = join_args(argc, argv);

    std::string species_table;
    if (const char* env = std::getenv("FASTGATE_SPECIES_TABLE")) species_table = env;

    // shared search options
    SearchConfig cfg;
    std::string pair = "ca43-sr88";
    double omega0_mhz = 1.0;  // 2pi MHz of ion 1
    double tilt = pi / 4;
    auto add_search_options = [&](CLI::App* sub) {
        sub->add_option("--pair", pair, "ion pair, e.g. ca43-sr88 (ion 1 first)");
        sub->add_option("--omega0", omega0_mhz, "ion-1 trap frequency / 2pi (MHz)");
        sub->add_option("--tilt", tilt, "beam tilt from the trap axis (rad)");
        sub->add_option("--nmax", cfg.nmax_ceiling, "SDK-count ceiling");
        sub->add_option("--nmax-start", cfg.nmax_start, "first SDK cap to try");
        sub->add_option("--nmax-step", cfg.nmax_step, "SDK cap increment");
        sub->add_option("--ensemble", cfg.ensemble_size, "stage-1 random restarts");
        sub->add_option("--groups", cfg.n_groups, "stage-1 group count (lower end)");
        sub->add_option("--groups-max", cfg.n_groups_max, "stage-1 group count (upper end)");
        sub->add_option("--zmax", cfg.z_max, "group amplitude bound");
        sub->add_option("--min-separation", cfg.min_separation, "SDK spacing floor (s)");
        sub->add_option("--target", cfg.target_infidelity, "acceptance infidelity");
        sub->add_option("--seed", cfg.seed, "RNG seed");
        sub->add_option("--nbar", cfg.nbar, "thermal occupancy per mode")
            ->expected(2);
        sub->add_option("--threads", cfg.threads, "worker cap (0 = hardware)");
        sub->add_flag("--j1-multiplicative", cfg.j1_multiplicative,
                      "literal multiplicative stage-1 cost");
        sub->add_option("--species-table", species_table,
                        "species config file (name mass_amu wavelength_nm)");
    };

    auto* solve = app.add_subcommand("solve", "search for a gate solution");
    double gate_time = 1.8e-6;
    std::string out_path;
    solve->add_option("--gate-time", gate_time, "target gate time (s)")->required();
    solve->add_option("--out", out_path, "solution JSON path");
    add_search_options(solve);

    auto* evaluate = app.add_subcommand("evaluate", "re-evaluate a stored solution");
    std::string solution_path;
    bool no_oracle = false;
    evaluate->add_option("--solution", solution_path, "solution JSON")->required();
    evaluate->add_flag("--no-oracle", no_oracle, "skip the branch-oracle cross-check");

    auto* sweep = app.add_subcommand("sweep", "noise/drift sweep of a solution");
    std::string kind = "jitter", grid_text, preset;
    int samples = 10000;
    std::uint64_t sweep_seed = 0;
    bool resample = false;
    unsigned sweep_threads = 0;
    sweep->add_option("--solution", solution_path, "solution JSON")->required();
    sweep->add_option("--kind", kind, "jitter | op_drift | common_drift | reprate");
    sweep->add_option("--grid", grid_text, "from:to:linN | from:to:logN | value");
    sweep->add_option("--preset", preset, "fig1e | fig1g | figS3 | figS4");
    sweep->add_option("--samples", samples, "Monte-Carlo realizations");
    sweep->add_option("--seed", sweep_seed, "RNG seed");
    sweep->add_flag("--resample", resample, "rejection resampling instead of clamping");
    sweep->add_option("--threads", sweep_threads, "worker cap");
    sweep->add_option("--out", out_path, "CSV path (stdout if omitted)");

    auto* pareto = app.add_subcommand("pareto", "gate-time / SDK-count frontier");
    std::string gate_times;
    pareto->add_option("--gate-times", gate_times, "gate-time grid, from:to:linN")
        ->required();
    pareto->add_option("--out", out_path, "CSV path (stdout if omitted)");
    add_search_options(pareto);

    auto* oracle_check = app.add_subcommand("oracle-check", "");
    std::uint64_t oracle_seed = 12345;
    oracle_check->add_option("--seed", oracle_seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (!species_table.empty()) {
            try {
                load_species_table(species_table);
            } catch (const std::exception& e) {
                throw DataError(e.what());
            }
        }
        if (solve->parsed() || pareto->parsed()) {
            cfg.trap = trap_from_pair(pair, two_pi * omega0_mhz * 1e6, tilt);
            cfg.gate_time = gate_time;
            try {
                cfg.validate();
            } catch (const std::domain_error& e) {
                throw UsageError(e.what());
            }
        }
        if (solve->parsed()) return cmd_solve(cfg, out_path, command, species_table);
        if (evaluate->parsed()) return cmd_evaluate(solution_path, !no_oracle);
        if (sweep->parsed())
            return cmd_sweep(solution_path, kind, grid_text, preset, samples, sweep_seed,
                             resample, sweep_threads, out_path, command);
        if (pareto->parsed()) return cmd_pareto(cfg, gate_times, out_path, command);
        if (oracle_check->parsed()) {
            std::string report;
            const bool ok = oracle::run_oracle_checks(report, oracle_seed);
            std::cout << report << (ok ? "all oracle checks passed\n"
                                       : "oracle checks FAILED\n");
            return ok ? exit_ok : 1;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_ok;
}
