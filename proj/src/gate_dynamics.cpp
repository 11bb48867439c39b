#include "fastgate/gate_dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace fastgate {

namespace {

// Plain summation is fine at paper scale (N <= 30); the compensated path
// bounds rounding for very long trains.
complexd sum_kick_phasors(std::span<const double> times, std::span<const int> dirs,
                          double omega) {
    if (times.size() <= 1000) {
        complexd s{};
        for (std::size_t m = 0; m < times.size(); ++m)
            s += double(dirs[m]) * std::polar(1.0, omega * times[m]);
        return s;
    }
    double re = 0.0, im = 0.0, cre = 0.0, cim = 0.0;
    for (std::size_t m = 0; m < times.size(); ++m) {
        const double ph = omega * times[m];
        const double zr = dirs[m] * std::cos(ph), zi = dirs[m] * std::sin(ph);
        double y = zr - cre, t = re + y;
        cre = (t - re) - y;
        re = t;
        y = zi - cim;
        t = im + y;
        cim = (t - im) - y;
        im = t;
    }
    return {re, im};
}

void check_nbar(std::span<const double> nbar) {
    for (double n : nbar)
        if (!(n >= 0.0)) throw std::domain_error("nbar must be >= 0 per mode");
}

double weighted_norm2(std::span<const complexd> beta, std::span<const double> nbar) {
    double s = 0.0;
    for (std::size_t a = 0; a < beta.size(); ++a)
        s += (nbar[a] + 0.5) * std::norm(beta[a]);
    return s;
}

}  // namespace

complexd kick_sum(const PulseSequence& seq, double omega) {
    return sum_kick_phasors(seq.times, seq.directions, omega);
}

std::array<ModeDisplacement, 2> displacement_amplitudes(const PulseSequence& seq,
                                                        const NormalModes& modes) {
    seq.validate_expanded();
    std::array<ModeDisplacement, 2> out;
    const complexd two_i{0.0, 2.0};
    for (int a = 0; a < 2; ++a) {
        const complexd s = kick_sum(seq, modes.omega[a]);
        for (int j = 0; j < 2; ++j)
            out[a].per_ion[j] = two_i * modes.eta[a][j] * modes.b[a][j] * s;
        out[a].plus = out[a].per_ion[1] + out[a].per_ion[0];
        out[a].minus = out[a].per_ion[1] - out[a].per_ion[0];
    }
    return out;
}

double entangling_phase(const PulseSequence& seq, const NormalModes& modes) {
    seq.validate_expanded();
    const std::size_t n = seq.size();
    double theta = 0.0;
    for (int a = 0; a < 2; ++a) {
        const double w = modes.omega[a];
        double pair_sum = 0.0;
        for (std::size_t m = 1; m < n; ++m) {
            double inner = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                inner += seq.directions[k] * std::sin(w * (seq.times[m] - seq.times[k]));
            pair_sum += seq.directions[m] * inner;
        }
        theta += 8.0 * modes.phase_coupling(a) * pair_sum;
    }
    return theta;
}

std::array<double, 2> motional_restoration_residual(const PulseSequence& seq,
                                                    const NormalModes& modes) {
    seq.validate_expanded();
    return {std::abs(kick_sum(seq, modes.omega[0])),
            std::abs(kick_sum(seq, modes.omega[1]))};
}

double wrap_angle(double theta) {
    double w = std::remainder(theta, two_pi);  // [-pi, pi]
    if (w <= -pi) w = pi;
    return w;
}

double phase_gap(double theta) { return std::abs(wrap_angle(theta)) - pi / 4; }

InfidelityTerms infidelity_terms(double theta, std::span<const complexd> beta_plus,
                                 std::span<const complexd> beta_minus,
                                 std::span<const double> nbar) {
    if (beta_plus.size() != nbar.size() || beta_minus.size() != nbar.size())
        throw std::invalid_argument("infidelity: mode list length mismatch");
    check_nbar(nbar);
    const double dphi = phase_gap(theta);
    InfidelityTerms terms;
    terms.phase = (2.0 / 3.0) * dphi * dphi;
    double motional = 0.0;
    for (std::size_t a = 0; a < nbar.size(); ++a)
        motional += (nbar[a] + 0.5) * (std::norm(beta_plus[a]) + std::norm(beta_minus[a]));
    terms.motional = (2.0 / 3.0) * motional;
    return terms;
}

double infidelity_truncated(double theta, std::span<const complexd> beta_plus,
                            std::span<const complexd> beta_minus,
                            std::span<const double> nbar) {
    return infidelity_terms(theta, beta_plus, beta_minus, nbar).total();
}

double fidelity_exact_state_averaged(double theta_uu, double theta_du,
                                     std::span<const complexd> beta1,
                                     std::span<const complexd> beta2,
                                     std::span<const double> nbar) {
    if (beta1.size() != nbar.size() || beta2.size() != nbar.size())
        throw std::invalid_argument("fidelity: mode list length mismatch");
    check_nbar(nbar);
    const double dphi = phase_gap(0.5 * (theta_uu - theta_du));
    std::vector<complexd> diff(nbar.size()), sum(nbar.size());
    for (std::size_t a = 0; a < nbar.size(); ++a) {
        diff[a] = beta1[a] - beta2[a];
        sum[a] = beta1[a] + beta2[a];
    }
    const double e1 = std::exp(-weighted_norm2(beta1, nbar));
    const double e2 = std::exp(-weighted_norm2(beta2, nbar));
    const double em = std::exp(-weighted_norm2(diff, nbar));
    const double ep = std::exp(-weighted_norm2(sum, nbar));
    return 0.5 + std::cos(2.0 * dphi) / 6.0 * (e1 + e2) + (em + ep) / 12.0;
}

double fidelity_state_dependent(const std::array<double, 4>& probs, double theta_uu,
                                double theta_du, std::span<const complexd> beta1,
                                std::span<const complexd> beta2,
                                std::span<const double> nbar) {
    if (beta1.size() != nbar.size() || beta2.size() != nbar.size())
        throw std::invalid_argument("fidelity: mode list length mismatch");
    check_nbar(nbar);
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw std::domain_error("populations must be >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::domain_error("populations must sum to 1");

    const double p_uu = probs[0], p_ud = probs[1], p_du = probs[2], p_dd = probs[3];
    const double dphi = phase_gap(0.5 * (theta_uu - theta_du));
    std::vector<complexd> diff(nbar.size()), sum(nbar.size());
    for (std::size_t a = 0; a < nbar.size(); ++a) {
        diff[a] = beta1[a] - beta2[a];
        sum[a] = beta1[a] + beta2[a];
    }
    const double e1 = std::exp(-weighted_norm2(beta1, nbar));
    const double e2 = std::exp(-weighted_norm2(beta2, nbar));
    const double em = std::exp(-weighted_norm2(diff, nbar));
    const double ep = std::exp(-weighted_norm2(sum, nbar));

    // Branch pairs differing in qubit 1 see ion 1's displacement (E1),
    // pairs differing in qubit 2 see ion 2's (E2); the same-spin and
    // opposite-spin diagonal pairs see beta1 +- beta2.
    return p_uu * p_uu + p_ud * p_ud + p_du * p_du + p_dd * p_dd +
           2.0 * p_uu * p_dd * ep + 2.0 * p_ud * p_du * em +
           2.0 * std::cos(2.0 * dphi) *
               (e1 * (p_uu * p_du + p_dd * p_ud) + e2 * (p_uu * p_ud + p_dd * p_du));
}

GateSolution reevaluate(const GateSolution& sol) {
    return reevaluate(sol, normal_modes(sol.trap));
}

GateSolution reevaluate(const GateSolution& sol, const NormalModes& modes) {
    GateSolution out = sol;
    const auto disp = displacement_amplitudes(sol.sequence, modes);
    out.theta = wrap_angle(entangling_phase(sol.sequence, modes));
    for (int a = 0; a < 2; ++a) {
        out.beta_plus[a] = disp[a].plus;
        out.beta_minus[a] = disp[a].minus;
    }
    out.infidelity =
        infidelity_truncated(out.theta, out.beta_plus, out.beta_minus, out.nbar);
    return out;
}

}  // namespace fastgate
