#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fastgate/gate_dynamics.hpp"

// Monte-Carlo and systematic error analysis of optimized gate solutions,
// plus the closed-form error budget estimators.
namespace fastgate {

enum class NoiseKind { timing_jitter, op_drift, common_drift, reprate_drift };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::timing_jitter;
    double magnitude = 0.0;  // s (jitter), rad/s (drift), fractional (rep rate)
    int n_samples = 10000;
    std::uint64_t seed = 0;
    double min_separation = 5e-9;  // clamp for perturbed trains
    // Jitter separation enforcement: default perturb-sort-clamp; the flag
    // switches to rejection resampling (tail statistics differ at large
    // sigma).
    bool resample = false;
    unsigned threads = 0;

    void validate() const;
};

struct NoisePoint {
    double magnitude = 0.0;
    double mean_error = 0.0;
    double std_error = 0.0;      // ensemble standard deviation
    double sem = 0.0;            // std / sqrt(n)
    double phase_term = 0.0;     // mean phase contribution
    double motional_term = 0.0;  // mean motional contribution
};

struct SweepResult {
    std::vector<NoisePoint> points;
};

// Gaussian timing jitter on every expanded SDK, minimum separation
// enforced by a forward sweep t_m <- max(t_m, t_{m-1} + min_separation)
// after sorting; errors averaged over spec.n_samples realizations.
NoisePoint jitter_monte_carlo(const GateSolution& sol, double sigma_t,
                              const NoiseSpec& spec);
SweepResult jitter_sweep(const GateSolution& sol, std::span<const double> sigma_grid,
                         const NoiseSpec& spec);

enum class DriftMode { op_only, common };

// Systematic mode-frequency shift: omega_op -> omega_op + delta (op_only)
// or both modes shifted (common); the pulse sequence is unchanged and the
// Lamb-Dicke factors follow the shifted frequencies.
SweepResult frequency_drift_sweep(const GateSolution& sol, DriftMode which,
                                  std::span<const double> delta_grid);

// Systematic drift of the SDK repetition rate: intra-group pulse offsets
// (integer multiples of the repetition period) are rescaled by (1+drift),
// group centers stay fixed. Groups come from the solution's search
// metadata, or are inferred as runs of pulses at the minimum separation.
SweepResult reprate_drift_sweep(const GateSolution& sol,
                                std::span<const double> fractional_grid);

// Closed-form error budgets.
double heating_error(double rate, double gate_time);         // eps = rate * tau
double sdk_error_bound(double n_sdks, double eps_pi);        // F >= (1 - N eps)^2
double dephasing_error(double coherence_time, double op_time);  // 1 - e^{-t/T2}
double finite_duration_budget(double n_sdks, double omega0, double tau_sdk);

}  // namespace fastgate
