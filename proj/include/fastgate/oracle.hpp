#pragma once

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <string>

#include "fastgate/gate_dynamics.hpp"
#include "fastgate/ion_physics.hpp"
#include "fastgate/pulse_sequence.hpp"

// Brute-force simulators, deliberately written against the kick-by-kick
// recursion (free rotation + displacement) rather than the closed-form
// sums, so that agreement with gate_dynamics is a two-route check. The
// only code shared with the analytic path is NormalModes itself.
namespace fastgate::oracle {

enum Branch { branch_uu = 0, branch_ud = 1, branch_du = 2, branch_dd = 3 };

// Coherent amplitudes (rotating frame of each mode, time origin t = 0)
// and accumulated phases for the four two-qubit branches.
struct BranchState {
    std::array<std::array<complexd, 2>, 4> amplitudes{};  // [branch][mode]
    std::array<double, 4> phases{};

    // (Theta_uu - Theta_du)/2, the relative two-qubit phase.
    double relative_phase() const { return 0.5 * (phases[branch_uu] - phases[branch_du]); }
};

// Kick-by-kick propagation: beta -> beta e^{-i w dt}, then
// beta -> beta + 4i z etabar (sign per branch), accumulating the
// displacement phase Im[4i z etabar conj(beta)] at each kick.
// beta0 is the initial coherent amplitude per mode at t = 0.
BranchState propagate_branches(const PulseSequence& seq, const NormalModes& modes,
                               const std::array<complexd, 2>& beta0 = {});

// Thermal expectation <D(beta)> by explicit Fock-state sum,
//   sum_n p_n e^{-|b|^2/2} L_n(|b|^2),  p_n = nbar^n/(nbar+1)^{n+1},
// Laguerre values by upward recurrence. Converges to
// exp(-|b|^2 (nbar + 1/2)); the cutoff is raised automatically until the
// thermal tail weight drops below 1e-12 (throws if that needs more than
// 64x the requested cutoff).
complexd thermal_displacement_expectation(complexd beta, double nbar, int n_trunc = 0);

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;  // |I(order) - I(order/2)|
};

// Average of a populations functional over the 3-sphere of two-qubit
// amplitudes: Gauss-Legendre in theta1, theta2 with weight
// sin^2(t1) sin(t2), trapezoid in the periodic theta3. The functional
// receives {P_uu, P_ud, P_du, P_dd}.
QuadratureResult average_over_3sphere(
    const std::function<double(const std::array<double, 4>&)>& f, int order = 32);

// Numerical eigen-decomposition of the 2x2 mass-weighted Coulomb Hessian,
// the independent route against the closed-form normal_modes().
NormalModes mode_hessian_oracle(const TrapSetup& setup);

// Cross-check battery used by `fastgate oracle-check`: random sequences
// oracle-vs-analytic, thermal closed form, quadrature vs closed-form
// average. Appends one line per check to `report`; returns true if all
// checks pass.
bool run_oracle_checks(std::string& report, std::uint64_t seed = 12345);

}  // namespace fastgate::oracle
