#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fastgate/gate_dynamics.hpp"
#include "fastgate/oracle.hpp"
#include "fastgate/species.hpp"

using namespace fastgate;
using namespace fastgate::oracle;

namespace {

NormalModes casr_modes() {
    return normal_modes(
        TrapSetup{lookup_species("ca43"), lookup_species("sr88"), two_pi * 1e6});
}

PulseSequence random_sequence(std::mt19937_64& rng, int n, double span = 2e-6) {
    std::uniform_real_distribution<double> ut(0.0, span);
    PulseSequence seq;
    for (int k = 0; k < n; ++k) {
        seq.times.push_back(ut(rng));
        seq.directions.push_back(rng() % 2 ? 1 : -1);
    }
    std::sort(seq.times.begin(), seq.times.end());
    return seq;
}

// +1 at 0 and -1 one period later for each mode, doubled so both kick
// sums vanish: S(w) = (1 - e^{iwT_op})(1 - e^{iwP_ip}) with T_op = 2pi/w_op.
PulseSequence both_modes_restored(const NormalModes& m) {
    const double p_ip = two_pi / m.omega_ip();
    const double t_op = two_pi / m.omega_op();
    PulseSequence seq;
    seq.times = {0.0, t_op, p_ip, p_ip + t_op};
    seq.directions = {1, -1, -1, 1};
    return seq;
}

}  // namespace

TEST_CASE("zero kicks: amplitudes pass through, no phase") {
    const auto modes = casr_modes();
    PulseSequence empty;
    const std::array<complexd, 2> beta0{complexd{0.3, -0.2}, complexd{-0.1, 0.4}};
    const auto st = propagate_branches(empty, modes, beta0);
    for (int b = 0; b < 4; ++b) {
        CHECK(st.phases[b] == 0.0);
        for (int a = 0; a < 2; ++a) CHECK(std::abs(st.amplitudes[b][a] - beta0[a]) < 1e-15);
    }
}

TEST_CASE("single kick displaces each branch by 4i z etabar") {
    const auto modes = casr_modes();
    PulseSequence seq;
    seq.times = {0.0};
    seq.directions = {1};
    const auto st = propagate_branches(seq, modes);
    for (int a = 0; a < 2; ++a) {
        const complexd i4{0.0, 4.0};
        CHECK(std::abs(st.amplitudes[branch_uu][a] - i4 * modes.eta_bar_plus[a]) < 1e-16);
        CHECK(std::abs(st.amplitudes[branch_du][a] - i4 * modes.eta_bar_minus[a]) < 1e-16);
        CHECK(std::abs(st.amplitudes[branch_dd][a] + st.amplitudes[branch_uu][a]) < 1e-16);
        CHECK(std::abs(st.amplitudes[branch_ud][a] + st.amplitudes[branch_du][a]) < 1e-16);
    }
    for (int b = 0; b < 4; ++b) CHECK(st.phases[b] == 0.0);
}

TEST_CASE("two opposite kicks at the same time cancel exactly") {
    const auto modes = casr_modes();
    PulseSequence seq;
    seq.times = {3e-7, 3e-7};
    seq.directions = {1, -1};
    const std::array<complexd, 2> beta0{complexd{0.2, 0.1}, complexd{-0.4, 0.0}};
    const auto st = propagate_branches(seq, modes, beta0);
    for (int b = 0; b < 4; ++b) {
        CHECK(st.phases[b] == 0.0);  // antisymmetric phase terms cancel
        for (int a = 0; a < 2; ++a) {
            const complexd expect = beta0[a];  // rotation undone in the rot frame
            CHECK(std::abs(st.amplitudes[b][a] - expect) < 1e-15);
        }
    }
}

TEST_CASE("oracle matches the analytic amplitude and phase sums") {
    std::mt19937_64 rng(21);
    const auto& table = builtin_species();
    double worst_beta = 0.0, worst_theta = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
        TrapSetup trap{table[rng() % table.size()], table[rng() % table.size()],
                       two_pi * 1e6};
        const auto modes = normal_modes(trap);
        const auto seq = random_sequence(rng, 2 + int(rng() % 29));
        const auto st = propagate_branches(seq, modes);
        for (int a = 0; a < 2; ++a) {
            const complexd s = kick_sum(seq, modes.omega[a]);
            const complexd i4{0.0, 4.0};
            worst_beta = std::max(worst_beta, std::abs(st.amplitudes[branch_uu][a] -
                                                       i4 * modes.eta_bar_plus[a] * s));
            worst_beta = std::max(worst_beta, std::abs(st.amplitudes[branch_du][a] -
                                                       i4 * modes.eta_bar_minus[a] * s));
        }
        worst_theta = std::max(worst_theta, std::abs(st.relative_phase() -
                                                     entangling_phase(seq, modes)));
        // branch symmetry
        CHECK(st.phases[branch_dd] == doctest::Approx(st.phases[branch_uu]).epsilon(1e-12));
        CHECK(st.phases[branch_ud] == doctest::Approx(st.phases[branch_du]).epsilon(1e-12));
    }
    CHECK(worst_beta < 1e-12);
    CHECK(worst_theta < 1e-12);
}

TEST_CASE("free evolution: beta0 drops out of Theta once motion is restored") {
    const auto modes = casr_modes();
    const auto seq = both_modes_restored(modes);
    const auto residual = motional_restoration_residual(seq, modes);
    REQUIRE(residual[0] < 1e-9);
    REQUIRE(residual[1] < 1e-9);
    const double theta_ref = propagate_branches(seq, modes).relative_phase();
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::array<complexd, 2> beta0{complexd{u(rng), u(rng)},
                                            complexd{u(rng), u(rng)}};
        const auto st = propagate_branches(seq, modes, beta0);
        CHECK(std::abs(st.relative_phase() - theta_ref) < 1e-9);
        // amplitudes return to the freely evolved beta0
        for (int a = 0; a < 2; ++a)
            CHECK(std::abs(st.amplitudes[branch_uu][a] - beta0[a]) < 1e-8);
    }
    // without restoration Theta does depend on beta0
    PulseSequence unrestored;
    unrestored.times = {0.0, 2e-7, 5e-7};
    unrestored.directions = {1, 1, -1};
    const double t0 = propagate_branches(unrestored, modes).relative_phase();
    const double t1 =
        propagate_branches(unrestored, modes, {complexd{1.0, 0.3}, complexd{0.0, 0.0}})
            .relative_phase();
    CHECK(std::abs(t0 - t1) > 1e-6);
}

TEST_CASE("thermal displacement expectation") {
    CHECK(thermal_displacement_expectation({0.0, 0.0}, 1.0).real() == doctest::Approx(1.0));
    // vacuum: coherent-state overlap
    const complexd b{0.25, -0.35};
    CHECK(thermal_displacement_expectation(b, 0.0).real() ==
          doctest::Approx(std::exp(-0.5 * std::norm(b))).epsilon(1e-13));
    // beta = 0.3, nbar = 1 against the closed form e^{-0.135}
    CHECK(std::abs(thermal_displacement_expectation({0.3, 0.0}, 1.0, 200).real() -
                   std::exp(-0.135)) < 1e-10);
    // hot mode forces the cutoff up; still matches the closed form
    CHECK(std::abs(thermal_displacement_expectation({0.2, 0.1}, 100.0).real() -
                   std::exp(-std::norm(complexd{0.2, 0.1}) * 100.5)) < 1e-10);
    CHECK(thermal_displacement_expectation(b, 2.5).imag() == 0.0);
    CHECK_THROWS_AS(thermal_displacement_expectation(b, -1.0), std::domain_error);
}

TEST_CASE("3-sphere quadrature: measure and closed forms") {
    const auto one = average_over_3sphere([](const std::array<double, 4>&) { return 1.0; });
    CHECK(std::abs(one.value - 1.0) < 1e-12);
    CHECK(one.error < 1e-12);

    // population moments under the round measure
    const auto p2 = average_over_3sphere(
        [](const std::array<double, 4>& p) { return p[0] * p[0]; });
    CHECK(std::abs(p2.value - 1.0 / 8.0) < 1e-12);
    const auto p11 = average_over_3sphere(
        [](const std::array<double, 4>& p) { return p[0] * p[3]; });
    CHECK(std::abs(p11.value - 1.0 / 24.0) < 1e-12);

    // ideal gate averages to unit fidelity
    const std::array<complexd, 2> zero{};
    const std::array<double, 2> nbar{1.0, 1.0};
    const auto ideal = average_over_3sphere([&](const std::array<double, 4>& p) {
        return fidelity_state_dependent(p, pi / 4, -pi / 4, zero, zero, nbar);
    });
    CHECK(std::abs(ideal.value - 1.0) < 1e-12);

    CHECK_THROWS_AS(average_over_3sphere([](const std::array<double, 4>&) { return 1.0; }, 4),
                    std::invalid_argument);
}

TEST_CASE("oracle-check battery passes") {
    std::string report;
    CHECK(run_oracle_checks(report));
    CHECK(report.find("FAIL") == std::string::npos);
}
