#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fastgate/gate_dynamics.hpp"
#include "fastgate/oracle.hpp"
#include "fastgate/species.hpp"

using namespace fastgate;

namespace {

TrapSetup casr_trap() {
    return TrapSetup{lookup_species("ca43"), lookup_species("sr88"), two_pi * 1e6};
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

}  // namespace

TEST_CASE("displacement amplitudes: simple sequences") {
    const auto modes = normal_modes(casr_trap());

    // equal and opposite kicks one ip period apart restore the ip mode
    PulseSequence seq;
    seq.times = {0.0, two_pi / modes.omega_ip()};
    seq.directions = {1, -1};
    auto disp = displacement_amplitudes(seq, modes);
    CHECK(std::abs(disp[0].per_ion[0]) < 1e-12);
    CHECK(std::abs(disp[0].per_ion[1]) < 1e-12);
    CHECK(std::abs(disp[0].plus) < 1e-12);
    CHECK(std::abs(disp[1].plus) > 1e-3);  // op mode is not restored

    // single kick at t = 0: beta^(j) = 2i eta b
    seq.times = {0.0};
    seq.directions = {1};
    disp = displacement_amplitudes(seq, modes);
    for (int a = 0; a < 2; ++a)
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(disp[a].per_ion[j] -
                           complexd{0.0, 2.0} * modes.eta[a][j] * modes.b[a][j]) < 1e-16);

    // 4i etabar convention for the +- combinations
    for (int a = 0; a < 2; ++a) {
        CHECK(std::abs(disp[a].plus - complexd{0.0, 4.0} * modes.eta_bar_plus[a]) < 1e-16);
        CHECK(std::abs(disp[a].minus - complexd{0.0, 4.0} * modes.eta_bar_minus[a]) < 1e-16);
    }
}

TEST_CASE("displacements and phase match the branch oracle on random trains") {
    std::mt19937_64 rng(5);
    const auto modes = normal_modes(casr_trap());
    for (int trial = 0; trial < 100; ++trial) {
        const auto seq = random_sequence(rng, 10);
        const auto disp = displacement_amplitudes(seq, modes);
        const auto br = oracle::propagate_branches(seq, modes);
        for (int a = 0; a < 2; ++a) {
            CHECK(std::abs(disp[a].plus - br.amplitudes[oracle::branch_uu][a]) < 1e-10);
            CHECK(std::abs(disp[a].minus - br.amplitudes[oracle::branch_du][a]) < 1e-10);
        }
        CHECK(std::abs(entangling_phase(seq, modes) - br.relative_phase()) < 1e-10);
    }
}

TEST_CASE("entangling phase: degenerate sequences") {
    const auto modes = normal_modes(casr_trap());
    PulseSequence seq;
    seq.times = {1e-7};
    seq.directions = {1};
    CHECK(entangling_phase(seq, modes) == 0.0);
    seq.times = {2e-7, 2e-7, 2e-7};
    seq.directions = {1, -1, 1};
    CHECK(entangling_phase(seq, modes) == 0.0);
}

TEST_CASE("unexpanded sequences are rejected") {
    const auto modes = normal_modes(casr_trap());
    PulseSequence groups;
    groups.times = {0.0, 1e-7};
    groups.directions = {2, -1};
    CHECK_THROWS_AS(displacement_amplitudes(groups, modes), std::invalid_argument);
    CHECK_THROWS_AS(entangling_phase(groups, modes), std::invalid_argument);
    groups.directions = {1, -1, 1};
    CHECK_THROWS_AS(entangling_phase(groups, modes), std::invalid_argument);
    groups.times = {1e-7, 0.0};
    groups.directions = {1, -1};
    CHECK_THROWS_AS(entangling_phase(groups, modes), std::invalid_argument);
}

TEST_CASE("time translation and direction flip") {
    std::mt19937_64 rng(17);
    const auto modes = normal_modes(casr_trap());
    for (int trial = 0; trial < 50; ++trial) {
        const auto seq = random_sequence(rng, 12);
        PulseSequence shifted = seq;
        for (auto& t : shifted.times) t += 0.75e-6;
        PulseSequence flipped = seq;
        for (auto& z : flipped.directions) z = -z;

        const double theta = entangling_phase(seq, modes);
        CHECK(std::abs(entangling_phase(shifted, modes) - theta) < 1e-12);
        CHECK(entangling_phase(flipped, modes) == doctest::Approx(theta).epsilon(1e-15));

        const auto d0 = displacement_amplitudes(seq, modes);
        const auto ds = displacement_amplitudes(shifted, modes);
        const auto df = displacement_amplitudes(flipped, modes);
        for (int a = 0; a < 2; ++a) {
            CHECK(std::abs(std::abs(ds[a].plus) - std::abs(d0[a].plus)) < 1e-12);
            CHECK(std::abs(std::abs(ds[a].minus) - std::abs(d0[a].minus)) < 1e-12);
            for (int j = 0; j < 2; ++j) {
                CHECK(std::abs(std::abs(ds[a].per_ion[j]) - std::abs(d0[a].per_ion[j])) <
                      1e-12);
                CHECK(std::abs(df[a].per_ion[j] + d0[a].per_ion[j]) < 1e-16);
            }
        }
    }
}

TEST_CASE("truncated infidelity: direct substitutions") {
    const std::array<double, 2> nbar{1.0, 1.0};
    const std::array<complexd, 2> zero{};
    CHECK(infidelity_truncated(pi / 4, zero, zero, nbar) == 0.0);
    CHECK(infidelity_truncated(-pi / 4, zero, zero, nbar) == 0.0);
    CHECK(infidelity_truncated(pi / 4 + 0.01, zero, zero, nbar) ==
          doctest::Approx((2.0 / 3.0) * 1e-4).epsilon(1e-12));
    const std::array<complexd, 2> bp{complexd{0.01, 0.0}, complexd{0.0, 0.0}};
    CHECK(infidelity_truncated(pi / 4, bp, zero, nbar) ==
          doctest::Approx(1e-4).epsilon(1e-12));
    const std::array<double, 2> bad{-0.5, 1.0};
    CHECK_THROWS_AS(infidelity_truncated(pi / 4, bp, zero, bad), std::domain_error);
    // theta is wrapped before the gap is taken
    CHECK(infidelity_truncated(pi / 4 + two_pi, zero, zero, nbar) ==
          doctest::Approx(0.0));
    // decomposition adds up to the total
    const auto terms = infidelity_terms(pi / 4 + 0.03, bp, bp, nbar);
    CHECK(terms.total() == doctest::Approx(terms.phase + terms.motional).epsilon(1e-16));
}

TEST_CASE("temperature insensitivity at perfect restoration") {
    const std::array<complexd, 2> zero{};
    for (double theta : {pi / 4, pi / 4 + 0.05, -pi / 4}) {
        const double ref = infidelity_truncated(
            theta, zero, zero, std::array<double, 2>{0.0, 0.0});
        for (double n : {1.0, 10.0, 100.0}) {
            const std::array<double, 2> nbar{n, n};
            CHECK(infidelity_truncated(theta, zero, zero, nbar) == ref);
            CHECK(fidelity_exact_state_averaged(theta, theta - pi / 2, zero, zero, nbar) ==
                  fidelity_exact_state_averaged(theta, theta - pi / 2, zero, zero,
                                                std::array<double, 2>{0.0, 0.0}));
        }
    }
}

TEST_CASE("exact state-averaged fidelity: closed-form points") {
    const std::array<double, 2> nbar{1.0, 1.0};
    const std::array<complexd, 2> zero{};
    // ideal gate: 1/2 + 2/6 + 2/12 = 1
    CHECK(fidelity_exact_state_averaged(pi / 4, -pi / 4, zero, zero, nbar) ==
          doctest::Approx(1.0).epsilon(1e-15));
    // dPhi = pi/4: cos term vanishes, F = 1/2 + 1/6
    CHECK(fidelity_exact_state_averaged(pi, 0.0, zero, zero, nbar) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    const std::array<complexd, 2> b1{complexd{0.1, 0.0}, complexd{0.0, 0.0}};
    CHECK_THROWS_AS(fidelity_exact_state_averaged(
                        pi / 4, -pi / 4, std::span<const complexd>(b1.data(), 1),
                        std::span<const complexd>(b1.data(), 2), nbar),
                    std::invalid_argument);
}

TEST_CASE("small errors: exact fidelity agrees with the truncated expansion") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double dphi = 1e-2 * u(rng);
        std::array<complexd, 2> bplus, bminus, b1, b2;
        for (int a = 0; a < 2; ++a) {
            bplus[a] = 1e-2 * complexd{u(rng), u(rng)};
            bminus[a] = 1e-2 * complexd{u(rng), u(rng)};
            b1[a] = bplus[a] - bminus[a];  // per-ion branch amplitudes
            b2[a] = bplus[a] + bminus[a];
        }
        const std::array<double, 2> nbar{1.0, 1.0};
        const double theta_uu = 0.4, theta_du = 0.4 - 2.0 * (pi / 4 + dphi);
        const double exact =
            fidelity_exact_state_averaged(theta_uu, theta_du, b1, b2, nbar);
        const double truncated =
            infidelity_truncated(pi / 4 + dphi, bplus, bminus, nbar);
        CHECK(std::abs((1.0 - exact) - truncated) < 1e-6);
    }
}

TEST_CASE("state-dependent fidelity: corners, validation, quadrature") {
    const std::array<double, 2> nbar{1.0, 1.0};
    std::array<complexd, 2> b1{complexd{0.2, 0.1}, complexd{-0.1, 0.05}};
    std::array<complexd, 2> b2{complexd{-0.05, 0.15}, complexd{0.1, -0.2}};
    // any computational basis state only picks up a global phase
    for (int corner = 0; corner < 4; ++corner) {
        std::array<double, 4> probs{};
        probs[corner] = 1.0;
        CHECK(fidelity_state_dependent(probs, 0.9, 0.1, b1, b2, nbar) ==
              doctest::Approx(1.0).epsilon(1e-15));
    }
    const std::array<double, 4> equal{0.25, 0.25, 0.25, 0.25};
    const std::array<complexd, 2> zero{};
    CHECK(fidelity_state_dependent(equal, pi / 4, -pi / 4, zero, zero, nbar) ==
          doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(fidelity_state_dependent({0.5, 0.5, 0.25, -0.25}, 0, 0, b1, b2, nbar),
                    std::domain_error);
    CHECK_THROWS_AS(fidelity_state_dependent({0.5, 0.5, 0.5, 0.5}, 0, 0, b1, b2, nbar),
                    std::domain_error);

    // equal populations, dPhi = 0.05, beta = 0: sphere average of the
    // state-dependent form equals the closed-form average
    const double th_uu = pi / 4 + 0.05, th_du = th_uu - 2.0 * (pi / 4 + 0.05);
    const auto quad = oracle::average_over_3sphere([&](const std::array<double, 4>& p) {
        return fidelity_state_dependent(p, th_uu, th_du, zero, zero, nbar);
    });
    const double closed = 0.5 + std::cos(0.1) / 3.0 + 1.0 / 6.0;
    CHECK(std::abs(quad.value - closed) < 1e-9);
    CHECK(std::abs(fidelity_exact_state_averaged(th_uu, th_du, zero, zero, nbar) - closed) <
          1e-15);
}

TEST_CASE("quadrature of the state-dependent form reproduces the closed average") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::array<double, 2> nbar{1.0, 1.0};
    for (int trial = 0; trial < 20; ++trial) {
        const double th_uu = 0.3 * u(rng);
        const double th_du = th_uu - pi / 2 + 0.2 * u(rng);
        std::array<complexd, 2> b1, b2;
        for (int a = 0; a < 2; ++a) {
            b1[a] = 0.3 * complexd{u(rng), u(rng)};
            b2[a] = 0.3 * complexd{u(rng), u(rng)};
        }
        const auto quad = oracle::average_over_3sphere([&](const std::array<double, 4>& p) {
            return fidelity_state_dependent(p, th_uu, th_du, b1, b2, nbar);
        });
        CHECK(std::abs(quad.value -
                       fidelity_exact_state_averaged(th_uu, th_du, b1, b2, nbar)) < 1e-8);
    }
}

TEST_CASE("same-species reduction of the phase formula") {
    TrapSetup trap{lookup_species("ca40"), lookup_species("ca40"), two_pi * 1e6};
    const auto modes = normal_modes(trap);
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const auto seq = random_sequence(rng, 8);
        // same-species closed form: 8 sum_a b1 b2 eta_a^2 sum_{m>n} ...
        double expect = 0.0;
        for (int a = 0; a < 2; ++a) {
            double pair_sum = 0.0;
            for (std::size_t m = 1; m < seq.size(); ++m)
                for (std::size_t n = 0; n < m; ++n)
                    pair_sum += seq.directions[m] * seq.directions[n] *
                                std::sin(modes.omega[a] * (seq.times[m] - seq.times[n]));
            expect += 8.0 * modes.b[a][0] * modes.b[a][1] * modes.eta[a][0] *
                      modes.eta[a][0] * pair_sum;
        }
        CHECK(entangling_phase(seq, modes) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("motional restoration residual") {
    const auto modes = normal_modes(casr_trap());
    PulseSequence seq;
    seq.times = {0.0, two_pi / modes.omega_op()};
    seq.directions = {1, -1};
    const auto r = motional_restoration_residual(seq, modes);
    CHECK(r[1] < 1e-12);
    CHECK(r[0] > 1e-3);
    // coherent sum of aligned kicks at equal time
    seq.times = {0.0, 0.0};
    seq.directions = {1, 1};
    const auto r2 = motional_restoration_residual(seq, modes);
    CHECK(r2[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(r2[1] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("wrap_angle maps into (-pi, pi]") {
    CHECK(wrap_angle(pi) == doctest::Approx(pi));
    CHECK(wrap_angle(-pi) == doctest::Approx(pi));
    CHECK(wrap_angle(3 * pi / 2) == doctest::Approx(-pi / 2));
    CHECK(wrap_angle(0.3 + 4 * two_pi) == doctest::Approx(0.3));
    CHECK(phase_gap(pi / 4) == doctest::Approx(0.0));
    CHECK(phase_gap(-pi / 4) == doctest::Approx(0.0));
}
