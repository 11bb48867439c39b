#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fastgate/gate_dynamics.hpp"
#include "fastgate/ion_physics.hpp"
#include "fastgate/pulse_sequence.hpp"

// Two-stage pulse-group search over SDK directions and timings.
// Stage 1 places SDKs in n_groups uniformly timed groups t_i = tau i/N and
// descends on the relaxed integer amplitudes z_i with an SDK-count
// penalty; stage 2 freezes the integer composition and locally refines
// the group center times under a group-overlap penalty.
namespace fastgate {

struct SearchConfig {
    TrapSetup trap;
    double gate_time = 1e-6;  // s; target span (realized span is reported)
    // search() sweeps the stage-1 group count over [n_groups, n_groups_max]
    // per n_max round; the different uniform grids reach different basins.
    // stage1_search/cost_stage1 use n_groups alone.
    int n_groups = 16;
    int n_groups_max = 20;
    int z_max = 5;
    double min_separation = 5e-9;  // s; 200 MHz SDK train
    int ensemble_size = 1000;      // stage-1 random restarts
    double target_infidelity = 1e-3;
    std::uint64_t seed = 0;
    std::array<double, 2> nbar{1.0, 1.0};

    // J1 = eps + c1 (tanh(c2 [N - (Nmax+1)]) + 1); c2 gives a soft ramp of
    // about one SDK around the cap so the relaxed descent sees a gradient.
    double penalty_c1_stage1 = 10.0;
    double penalty_c2_stage1 = 5.0;
    // J2 overlap penalty, approximately a 2*c1 step per overlapping pair.
    double penalty_c1_stage2 = 10.0;
    double penalty_c2_stage2 = 1e9;
    // Literal multiplicative form of the stage-1 cost (J1 = eps * penalty)
    // for comparison; the additive form is the default.
    bool j1_multiplicative = false;

    int n_max = 5;          // active SDK cap for the stage-1 cost
    int nmax_start = 0;     // search(): 0 = start at the phase-feasibility bound
    int nmax_step = 1;
    int nmax_ceiling = 32;
    int max_candidates = 0;  // 0 = refine every deduplicated stage-1 candidate

    // Preferred sign of Theta among otherwise tied solutions. The cost is
    // sign-blind (it targets |Theta| = pi/4, both signs are maximally
    // entangling up to local rotations), so this only breaks ties.
    double target_sign = +1.0;

    unsigned threads = 0;  // 0 = hardware concurrency
    int lbfgs_max_iterations = 400;

    void validate() const;
};

// Stage-1 candidate: signed integer group amplitudes on the uniform grid.
struct GroupVector {
    std::vector<int> z;
    double gate_time = 0.0;

    std::vector<double> times() const;  // t_i = gate_time * (i+1) / N
    int total_sdks() const;             // sum |z_i|
};

// --- stage-1 cost -----------------------------------------------------
// Relaxed cost over real-valued group amplitudes; each group acts as a
// single kick of weight z_i (free evolution within a group neglected).
// The SDK count uses the smoothed |z| ~ sqrt(z^2 + 1e-6) so the descent
// stays differentiable at z = 0.
double cost_stage1(std::span<const double> z, const SearchConfig& config);
double cost_stage1_grad(std::span<const double> z, const SearchConfig& config,
                        std::span<double> grad);
// Ranking cost of an integer candidate (exact SDK count in the penalty).
double cost_stage1_integer(const GroupVector& gv, const SearchConfig& config);

// Multistart relaxed descent + integerization (round, clamp to z_max,
// floor/ceil polish of the best candidate), sign-canonicalized and
// deduplicated, ranked by integer cost.
std::vector<GroupVector> stage1_search(const SearchConfig& config);

// --- stage 2 ------------------------------------------------------------
// Group i with amplitude z_i becomes |z_i| unit kicks of sign sgn(z_i)
// spaced exactly min_separation apart, centered on the group time.
PulseSequence expand_groups(const GroupVector& gv, double min_separation);

// Cost over per-group center times (one entry per group of gv, empty
// groups ignored): expanded-sequence infidelity plus the tanh overlap
// penalty over ordered pairs of occupied groups, where the gap is
// measured between nearest pulse edges.
double cost_stage2(std::span<const double> center_times, const GroupVector& gv,
                   const SearchConfig& config);
double cost_stage2_grad(std::span<const double> center_times, const GroupVector& gv,
                        const SearchConfig& config, std::span<double> grad);

// Refine the center times of an integer candidate from the uniform grid;
// returns the expanded, fully evaluated solution (best iterate if the
// local minimization stalls, flagged via search.converged).
GateSolution stage2_refine(const GroupVector& candidate, const SearchConfig& config);

// --- full pipeline -------------------------------------------------------
// An upper bound on |Theta| attainable with n SDKs in a span tau
// (pair count times the per-pair coupling ceiling); used for the
// feasibility lower bound on the SDK count.
double max_entangling_phase_bound(const NormalModes& modes, double tau, int n_sdks);
int min_feasible_sdk_count(const NormalModes& modes, double tau);

using ProgressFn = std::function<void(const std::string&)>;

// Iterate n_max upward (from the feasibility bound unless nmax_start is
// set), running stage 1 + stage 2, until a solution passes the
// convergence gates: infidelity <= target, per-mode restoration residual
// <= 1e-4, |dPhi| <= 1e-2 * pi/4, and all pulse gaps >= min_separation.
// Otherwise returns the best effort found, flagged non-converged.
GateSolution search(const SearchConfig& config, const ProgressFn& progress = {});

// --- universal rescaling --------------------------------------------------
// etabar_eff = sqrt(|b^(1) b^(2)| eta^(1) eta^(2)) of the given mode
// (default ip; the dominant-mode choice is left to the caller).
double effective_coupling(const NormalModes& modes, int mode = 0);

struct RescaledPoint {
    double rescaled_gate_time = 0.0;  // dOmega * tau / 2pi
    double rescaled_n_sdks = 0.0;     // etabar_eff * N
};
std::vector<RescaledPoint> universal_rescale(std::span<const GateSolution> solutions,
                                             int mode = 0);

}  // namespace fastgate
