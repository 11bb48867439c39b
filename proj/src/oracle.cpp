#include "fastgate/oracle.hpp"

#include <eigen3/Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fastgate::oracle {

namespace {

// etabar sign seen by each branch: the SDK displaces branch (s1 s2) by
// 4i z (s1 b1 eta1 + s2 b2 eta2)/2 per mode.
double branch_coupling(const NormalModes& m, int branch, int mode) {
    switch (branch) {
        case branch_uu: return m.eta_bar_plus[mode];
        case branch_dd: return -m.eta_bar_plus[mode];
        case branch_du: return m.eta_bar_minus[mode];
        case branch_ud: return -m.eta_bar_minus[mode];
    }
    throw std::logic_error("bad branch");
}

}  // namespace

BranchState propagate_branches(const PulseSequence& seq, const NormalModes& modes,
                               const std::array<complexd, 2>& beta0) {
    seq.validate_expanded();
    BranchState st;
    for (int branch = 0; branch < 4; ++branch) {
        double phase = 0.0;
        for (int mode = 0; mode < 2; ++mode) {
            const double w = modes.omega[mode];
            const double eb = branch_coupling(modes, branch, mode);
            complexd beta = beta0[mode];
            double t_prev = 0.0;
            for (std::size_t k = 0; k < seq.size(); ++k) {
                beta *= std::polar(1.0, -w * (seq.times[k] - t_prev));
                const complexd kick = complexd{0.0, 4.0} * double(seq.directions[k]) * eb;
                phase += std::imag(kick * std::conj(beta));
                beta += kick;
                t_prev = seq.times[k];
            }
            // undo the net rotation so amplitudes compare against the
            // absolute-time closed form 4i etabar sum z e^{iwt} + beta0
            st.amplitudes[branch][mode] = beta * std::polar(1.0, w * t_prev);
        }
        st.phases[branch] = phase;
    }
    return st;
}

complexd thermal_displacement_expectation(complexd beta, double nbar, int n_trunc) {
    if (!(nbar >= 0.0)) throw std::domain_error("nbar must be >= 0");
    if (n_trunc <= 0) n_trunc = std::max(200, int(20.0 * (nbar + 1.0)));
    if (nbar == 0.0) return std::exp(-0.5 * std::norm(beta));

    const double x = std::norm(beta);
    const double ratio = nbar / (nbar + 1.0);
    const int requested = n_trunc;
    // tail weight of the truncated thermal distribution: ratio^(n+1)
    while (double(n_trunc + 1) * std::log(ratio) > std::log(1e-12)) {
        n_trunc *= 2;
        if (n_trunc > 64 * requested)
            throw std::runtime_error("thermal_displacement_expectation: cutoff too small");
    }

    double acc = 0.0;
    double p = 1.0 / (nbar + 1.0);  // p_0
    double l_prev = 1.0;            // L_0(x)
    double l_curr = 1.0 - x;        // L_1(x)
    acc += p * l_prev;
    for (int n = 1; n <= n_trunc; ++n) {
        p *= ratio;
        acc += p * l_curr;
        const double l_next = ((2.0 * n + 1.0 - x) * l_curr - n * l_prev) / (n + 1.0);
        l_prev = l_curr;
        l_curr = l_next;
    }
    return complexd{std::exp(-0.5 * x) * acc, 0.0};
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

double sphere_average(const std::function<double(const std::array<double, 4>&)>& f,
                      int order) {
    std::vector<double> x, w;
    gauss_legendre(order, x, w);
    // measure sin^2(t1) sin(t2) dt1 dt2 dt3, normalization 2 pi^2
    double integral = 0.0;
    for (int i = 0; i < order; ++i) {
        const double t1 = 0.5 * pi * (x[i] + 1.0);
        const double w1 = 0.5 * pi * w[i];
        const double s1 = std::sin(t1), c1 = std::cos(t1);
        for (int j = 0; j < order; ++j) {
            const double t2 = 0.5 * pi * (x[j] + 1.0);
            const double w2 = 0.5 * pi * w[j];
            const double s2 = std::sin(t2), c2 = std::cos(t2);
            double inner = 0.0;
            for (int k = 0; k < order; ++k) {
                const double t3 = two_pi * k / order;
                const double s3 = std::sin(t3), c3 = std::cos(t3);
                const std::array<double, 4> probs = {
                    s1 * s1 * s2 * s2 * s3 * s3,  // P_uu
                    s1 * s1 * s2 * s2 * c3 * c3,  // P_ud
                    s1 * s1 * c2 * c2,            // P_du
                    c1 * c1,                      // P_dd
                };
                inner += f(probs);
            }
            integral += w1 * w2 * (two_pi / order) * s1 * s1 * s2 * inner;
        }
    }
    return integral / (2.0 * pi * pi);
}

}  // namespace

QuadratureResult average_over_3sphere(
    const std::function<double(const std::array<double, 4>&)>& f, int order) {
    if (order < 8) throw std::invalid_argument("quadrature order must be >= 8");
    QuadratureResult r;
    r.value = sphere_average(f, order);
    r.error = std::abs(r.value - sphere_average(f, order / 2));
    return r;
}

NormalModes mode_hessian_oracle(const TrapSetup& setup) {
    setup.validate();
    const double mu = setup.mass_ratio();
    const double w0sq = setup.omega0_ion1 * setup.omega0_ion1;

    // Linearized two-ion potential about equilibrium: both ions see trap
    // curvature C = m1 w0^2 (pseudopotential), Coulomb coupling at the
    // equilibrium spacing contributes an off-diagonal K = C. In
    // mass-weighted coordinates H_ij = V_ij / sqrt(m_i m_j).
    Eigen::Matrix2d h;
    h << 2.0 * w0sq, -w0sq / std::sqrt(mu),  //
        -w0sq / std::sqrt(mu), 2.0 * w0sq / mu;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(h);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("mode_hessian_oracle: eigensolver failed");

    NormalModes m;
    const auto evals = solver.eigenvalues();   // ascending: ip then op
    const auto evecs = solver.eigenvectors();  // columns
    const double k1 = effective_wavevector(setup.ion1.raman_wavelength, setup.beam_tilt);
    const double k2 = effective_wavevector(setup.ion2.raman_wavelength, setup.beam_tilt);
    for (int mode = 0; mode < 2; ++mode) {
        m.omega[mode] = std::sqrt(evals(mode));
        Eigen::Vector2d v = evecs.col(mode);
        if (v(0) < 0.0) v = -v;  // sign convention: first component positive
        m.b[mode] = {v(0), v(1)};
        m.eta[mode][0] = lamb_dicke(k1, setup.ion1.mass, m.omega[mode]);
        m.eta[mode][1] = lamb_dicke(k2, setup.ion2.mass, m.omega[mode]);
        m.eta_bar_plus[mode] =
            0.5 * (m.b[mode][1] * m.eta[mode][1] + m.b[mode][0] * m.eta[mode][0]);
        m.eta_bar_minus[mode] =
            0.5 * (m.b[mode][1] * m.eta[mode][1] - m.b[mode][0] * m.eta[mode][0]);
    }
    return m;
}

bool run_oracle_checks(std::string& report, std::uint64_t seed) {
    std::ostringstream out;
    bool all_ok = true;
    auto check = [&](const std::string& name, double worst, double tol) {
        const bool ok = worst <= tol;
        all_ok = all_ok && ok;
        out << (ok ? "PASS" : "FAIL") << "  " << name << "  (worst " << worst
            << ", tol " << tol << ")\n";
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif01(0.0, 1.0);

    // analytic amplitudes / phase vs branch recursion over random
    // sequences on random built-in pairs
    double worst_beta = 0.0, worst_theta = 0.0;
    const auto& table = builtin_species();
    for (int trial = 0; trial < 200; ++trial) {
        TrapSetup trap;
        trap.ion1 = table[rng() % table.size()];
        trap.ion2 = table[rng() % table.size()];
        trap.omega0_ion1 = two_pi * 1e6;
        const NormalModes modes = normal_modes(trap);

        PulseSequence seq;
        const int n = 2 + int(rng() % 29);
        for (int k = 0; k < n; ++k) {
            seq.times.push_back(unif01(rng) * 2e-6);
            seq.directions.push_back(rng() % 2 ? 1 : -1);
        }
        std::sort(seq.times.begin(), seq.times.end());

        const auto disp = displacement_amplitudes(seq, modes);
        const auto br = propagate_branches(seq, modes);
        for (int a = 0; a < 2; ++a) {
            worst_beta = std::max(worst_beta,
                                  std::abs(disp[a].plus - br.amplitudes[branch_uu][a]));
            worst_beta = std::max(worst_beta,
                                  std::abs(disp[a].minus - br.amplitudes[branch_du][a]));
        }
        worst_theta = std::max(
            worst_theta, std::abs(entangling_phase(seq, modes) - br.relative_phase()));
    }
    check("branch amplitudes vs Eq. 1 sums", worst_beta, 1e-10);
    check("relative phase vs closed form", worst_theta, 1e-10);

    // thermal expectation vs exp(-|b|^2 (nbar + 1/2))
    double worst_thermal = 0.0;
    for (double nbar : {0.0, 0.5, 1.0, 5.0}) {
        for (int trial = 0; trial < 20; ++trial) {
            const complexd beta{unif01(rng) - 0.5, unif01(rng) - 0.5};
            const double exact = std::exp(-std::norm(beta) * (nbar + 0.5));
            worst_thermal = std::max(
                worst_thermal,
                std::abs(thermal_displacement_expectation(beta, nbar).real() - exact));
        }
    }
    check("thermal displacement vs closed form", worst_thermal, 1e-10);

    // 3-sphere quadrature vs exact state-averaged fidelity
    double worst_quad = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const double th_uu = 0.3 * (unif01(rng) - 0.5);
        const double th_du = th_uu - pi / 2 + 0.1 * (unif01(rng) - 0.5);
        std::array<complexd, 2> b1, b2;
        for (int a = 0; a < 2; ++a) {
            b1[a] = 0.2 * complexd{unif01(rng) - 0.5, unif01(rng) - 0.5};
            b2[a] = 0.2 * complexd{unif01(rng) - 0.5, unif01(rng) - 0.5};
        }
        const std::array<double, 2> nbar{1.0, 1.0};
        const auto quad = average_over_3sphere([&](const std::array<double, 4>& p) {
            return fidelity_state_dependent(p, th_uu, th_du, b1, b2, nbar);
        });
        const double exact = fidelity_exact_state_averaged(th_uu, th_du, b1, b2, nbar);
        worst_quad = std::max(worst_quad, std::abs(quad.value - exact));
    }
    check("3-sphere quadrature vs closed-form average", worst_quad, 1e-8);

    report += out.str();
    return all_ok;
}

}  // namespace fastgate::oracle
