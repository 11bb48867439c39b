#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fastgate/ion_physics.hpp"
#include "fastgate/pulse_sequence.hpp"

namespace fastgate {

using complexd = std::complex<double>;

// Final displacement amplitudes of one mode, in both bookkeeping
// conventions of the problem:
//   per_ion[j] = 2i eta_a^(j) b_a^(j) sum_m z_m e^{i w_a t_m}
//   plus/minus = per_ion[1] +- per_ion[0] = 4i etabar^{+-} sum_m z_m e^{i w_a t_m}
// plus/minus are the branch amplitudes that enter the infidelity.
struct ModeDisplacement {
    std::array<complexd, 2> per_ion{};
    complexd plus{};
    complexd minus{};
};

// sum_m z_m e^{i w t_m} for one mode; zero iff spin and motion decouple.
complexd kick_sum(const PulseSequence& seq, double omega);

std::array<ModeDisplacement, 2> displacement_amplitudes(const PulseSequence& seq,
                                                        const NormalModes& modes);

// Two-qubit phase
//   Theta = 8 sum_a b_a^(1) b_a^(2) eta_a^(1) eta_a^(2)
//              sum_{m>n} z_n z_m sin(w_a (t_m - t_n)).
double entangling_phase(const PulseSequence& seq, const NormalModes& modes);

// |sum_m z_m e^{i w_a t_m}| per mode.
std::array<double, 2> motional_restoration_residual(const PulseSequence& seq,
                                                    const NormalModes& modes);

// Wrap an angle into (-pi, pi].
double wrap_angle(double theta);

// Phase error |Theta_wrapped| - pi/4 (Theta = +-pi/4 are both ideal,
// being equivalent up to local rotations).
double phase_gap(double theta);

// Leading-order state-averaged infidelity,
//   eps = (2/3) [ |dPhi|^2 + sum_a (nbar_a + 1/2)(|b+|^2 + |b-|^2) ].
// The two addends are also exposed separately for error budgets.
struct InfidelityTerms {
    double phase = 0.0;
    double motional = 0.0;
    double total() const { return phase + motional; }
};
InfidelityTerms infidelity_terms(double theta, std::span<const complexd> beta_plus,
                                 std::span<const complexd> beta_minus,
                                 std::span<const double> nbar);
double infidelity_truncated(double theta, std::span<const complexd> beta_plus,
                            std::span<const complexd> beta_minus,
                            std::span<const double> nbar);

// Exact state-averaged fidelity from the branch phases and the per-ion
// branch displacement amplitudes beta^(j) = 4i b^(j) eta^(j) sum z e^{iwt}
// (note: twice the per_ion amplitudes above),
//   F = 1/2 + cos(2 dPhi)/6 (E1 + E2) + (Em + Ep)/12,
//   Ej = exp(-sum_a (nbar+1/2) |beta_a^(j)|^2),
//   Em/Ep with |beta^(1) -+ beta^(2)|^2.
double fidelity_exact_state_averaged(double theta_uu, double theta_du,
                                     std::span<const complexd> beta1,
                                     std::span<const complexd> beta2,
                                     std::span<const double> nbar);

// Exact fidelity for a definite two-qubit input with populations
// probs = {P_uu, P_ud, P_du, P_dd} (must sum to 1). Averaging this over
// the 3-sphere of populations reproduces fidelity_exact_state_averaged.
double fidelity_state_dependent(const std::array<double, 4>& probs, double theta_uu,
                                double theta_du, std::span<const complexd> beta1,
                                std::span<const complexd> beta2,
                                std::span<const double> nbar);

// Search bookkeeping attached to an optimized solution.
struct SearchMeta {
    std::uint64_t seed = 0;
    int n_max = 0;                      // SDK cap active when found
    std::vector<int> group_z;           // stage-1 amplitudes of active groups
    std::vector<double> group_centers;  // refined group center times (s)
    double min_separation = 5e-9;       // s
    bool converged = false;
    bool bandwidth_limited = false;     // a consecutive gap sits at min_separation
    std::vector<double> cost_history;   // best stage-2 cost per n_max tried
};

struct GateSolution {
    TrapSetup trap;
    PulseSequence sequence;             // expanded, z = +-1
    std::array<double, 2> nbar{1.0, 1.0};
    double theta = 0.0;                 // wrapped into (-pi, pi]
    std::array<complexd, 2> beta_plus{};
    std::array<complexd, 2> beta_minus{};
    double infidelity = 0.0;
    SearchMeta search;

    std::size_t n_sdks() const { return sequence.size(); }
    double gate_time() const { return sequence.span(); }
};

// Recompute theta/beta/infidelity of `sol.sequence` against fresh mode
// structure; used after deserialization and by the robustness sweeps.
GateSolution reevaluate(const GateSolution& sol);
GateSolution reevaluate(const GateSolution& sol, const NormalModes& modes);

}  // namespace fastgate
