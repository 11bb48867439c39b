#pragma once

#include <array>

#include "fastgate/constants.hpp"
#include "fastgate/species.hpp"

namespace fastgate {

// A two-ion crystal. Ion 1 is the ion whose axial trap frequency is
// specified (the hyperfine/memory qubit in the pairings we study); ion 2
// sees omega0 * sqrt(m1/m2) through the RF pseudopotential. The Raman
// beams are tilted by beam_tilt from the trap axis, so the axial
// two-photon wavevector is 2*k*cos(beam_tilt).
struct TrapSetup {
    SpeciesSpec ion1;
    SpeciesSpec ion2;
    double omega0_ion1 = 0.0;   // rad/s
    double beam_tilt = pi / 4;  // rad, in [0, pi/2)

    double mass_ratio() const { return ion2.mass / ion1.mass; }
    void validate() const;
};

// Modes are indexed 0 = in-phase (ip), 1 = out-of-phase (op), with
// omega[0] < omega[1] always. Eigenvectors are the mass-weighted normal
// mode vectors, unit norm, b_ip = (+,+) and b_op = (+,-).
// eta[mode][ion] is the ion- and mode-dependent Lamb-Dicke parameter
// built from each ion's effective wavevector. eta_bar_plus/minus are the
// effective couplings to the centre-of-mass / relative spin coordinates,
//   eta_bar^{+-} = (b^(2) eta^(2) +- b^(1) eta^(1)) / 2.
struct NormalModes {
    std::array<double, 2> omega{};                 // rad/s, {ip, op}
    std::array<std::array<double, 2>, 2> b{};      // [mode][ion]
    std::array<std::array<double, 2>, 2> eta{};    // [mode][ion]
    std::array<double, 2> eta_bar_plus{};          // per mode
    std::array<double, 2> eta_bar_minus{};         // per mode

    double omega_ip() const { return omega[0]; }
    double omega_op() const { return omega[1]; }
    // b^(1) b^(2) eta^(1) eta^(2), the coupling that weights the
    // entangling-phase contribution of each mode.
    double phase_coupling(int mode) const {
        return b[mode][0] * b[mode][1] * eta[mode][0] * eta[mode][1];
    }
};

// omega0 scaling of the RF pseudopotential with ion mass:
// omega(target) = ref_omega0 * sqrt(ref_mass / target_mass).
double pseudopotential_frequency(double ref_omega0, double ref_mass, double target_mass);

// Axial projection of the two-photon wavevector for counter-propagating
// Raman beams tilted by theta from the trap axis: 2*(2*pi/lambda)*cos(theta).
// theta = pi/4 gives the sqrt(2)*k of the paper's geometry.
double effective_wavevector(double wavelength, double tilt);

// eta = k_eff * sqrt(hbar / (2 m omega))
double lamb_dicke(double k_eff, double mass, double omega);

// Analytic two-ion axial mode structure for a general mass ratio
// mu = m2/m1 (closed-form eigenproblem of the mass-weighted Coulomb
// Hessian):
//   omega_ip^2 = omega0^2 (1 + mu - s)/mu,  omega_op^2 = omega0^2 (1 + mu + s)/mu,
//   s = sqrt(1 - mu + mu^2),
//   b_ip = (b1, b2), b_op = (b2, -b1),  b1^2 = (1 - mu + s)/(2 s).
NormalModes normal_modes(const TrapSetup& setup);

}  // namespace fastgate
