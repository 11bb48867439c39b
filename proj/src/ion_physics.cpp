#include "fastgate/ion_physics.hpp"

#include <cmath>
#include <stdexcept>

namespace fastgate {

void TrapSetup::validate() const {
    ion1.validate();
    ion2.validate();
    if (!(omega0_ion1 > 0.0))
        throw std::domain_error("trap frequency must be > 0");
    if (!(beam_tilt >= 0.0 && beam_tilt < pi / 2))
        throw std::domain_error("beam tilt must lie in [0, pi/2)");
}

double pseudopotential_frequency(double ref_omega0, double ref_mass, double target_mass) {
    if (!(ref_omega0 > 0.0) || !(ref_mass > 0.0) || !(target_mass > 0.0))
        throw std::domain_error("pseudopotential_frequency: inputs must be > 0");
    return ref_omega0 * std::sqrt(ref_mass / target_mass);
}

double effective_wavevector(double wavelength, double tilt) {
    if (!(wavelength > 0.0))
        throw std::domain_error("effective_wavevector: wavelength must be > 0");
    return 2.0 * (two_pi / wavelength) * std::cos(tilt);
}

double lamb_dicke(double k_eff, double mass, double omega) {
    if (!(k_eff > 0.0) || !(mass > 0.0) || !(omega > 0.0))
        throw std::domain_error("lamb_dicke: inputs must be > 0");
    return k_eff * std::sqrt(hbar / (2.0 * mass * omega));
}

NormalModes normal_modes(const TrapSetup& setup) {
    setup.validate();
    const double mu = setup.mass_ratio();
    if (!(mu > 0.0)) throw std::domain_error("normal_modes: mass ratio must be > 0");

    const double w0sq = setup.omega0_ion1 * setup.omega0_ion1;
    const double s = std::sqrt(1.0 - mu + mu * mu);

    NormalModes m;
    m.omega[0] = std::sqrt(w0sq * (1.0 + mu - s) / mu);
    m.omega[1] = std::sqrt(w0sq * (1.0 + mu + s) / mu);

    // Eigenvectors of the mass-weighted Hessian. The op vector is the
    // orthogonal complement (b2, -b1); at mu = 1 this is (1, -1)/sqrt(2).
    const double b1 = std::sqrt((1.0 - mu + s) / (2.0 * s));
    const double b2 = std::sqrt(1.0 - b1 * b1);
    m.b[0] = {b1, b2};
    m.b[1] = {b2, -b1};

    const double k1 = effective_wavevector(setup.ion1.raman_wavelength, setup.beam_tilt);
    const double k2 = effective_wavevector(setup.ion2.raman_wavelength, setup.beam_tilt);
    for (int mode = 0; mode < 2; ++mode) {
        m.eta[mode][0] = lamb_dicke(k1, setup.ion1.mass, m.omega[mode]);
        m.eta[mode][1] = lamb_dicke(k2, setup.ion2.mass, m.omega[mode]);
        m.eta_bar_plus[mode] =
            0.5 * (m.b[mode][1] * m.eta[mode][1] + m.b[mode][0] * m.eta[mode][0]);
        m.eta_bar_minus[mode] =
            0.5 * (m.b[mode][1] * m.eta[mode][1] - m.b[mode][0] * m.eta[mode][0]);
    }
    return m;
}

}  // namespace fastgate
