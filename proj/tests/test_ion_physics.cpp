#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "fastgate/constants.hpp"
#include "fastgate/ion_physics.hpp"
#include "fastgate/oracle.hpp"
#include "fastgate/species.hpp"

using namespace fastgate;

namespace {

TrapSetup pair_setup(const std::string& ion1, const std::string& ion2,
                     double omega0 = two_pi * 1e6) {
    return TrapSetup{lookup_species(ion1), lookup_species(ion2), omega0};
}

double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace

TEST_CASE("pseudopotential frequency scaling") {
    const double w0 = two_pi * 1e6;
    CHECK(pseudopotential_frequency(w0, 1.0, 1.0) == doctest::Approx(w0).epsilon(1e-15));
    // sqrt(133/138), evaluated directly
    CHECK(rel_diff(pseudopotential_frequency(w0, 133 * atomic_mass_unit,
                                             138 * atomic_mass_unit),
                   w0 * std::sqrt(133.0 / 138.0)) < 1e-14);
    CHECK(pseudopotential_frequency(w0, 2e-26, 8e-26) ==
          doctest::Approx(w0 / 2).epsilon(1e-15));
    CHECK_THROWS_AS(pseudopotential_frequency(0.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(pseudopotential_frequency(w0, -1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(pseudopotential_frequency(w0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("effective wavevector") {
    const double lam = 532e-9;
    CHECK(rel_diff(effective_wavevector(lam, pi / 4), std::sqrt(2.0) * two_pi / lam) <
          1e-14);
    CHECK(effective_wavevector(lam, pi / 4) == doctest::Approx(1.6703e7).epsilon(1e-4));
    CHECK(effective_wavevector(lam, 0.0) ==
          doctest::Approx(2.0 * two_pi / lam).epsilon(1e-15));
    // perpendicular beams: no axial projection (cos(pi/2) to double precision)
    CHECK(std::abs(effective_wavevector(lam, pi / 2)) < 1e-8 * two_pi / lam);
    CHECK_THROWS_AS(effective_wavevector(0.0, 0.0), std::domain_error);
}

TEST_CASE("lamb-dicke parameter") {
    const double k = 1.67e7, m = 2.2e-25, w = two_pi * 1e6;
    CHECK(lamb_dicke(k, m, w) / lamb_dicke(k, 4 * m, w) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(lamb_dicke(k, m, w) / lamb_dicke(k, m, 4 * w) == doctest::Approx(2.0).epsilon(1e-14));
    // 133Ba, 532 nm at pi/4, 2pi x 1 MHz; regression constant
    const double eta = lamb_dicke(effective_wavevector(532e-9, pi / 4),
                                  132.906007 * atomic_mass_unit, two_pi * 1e6);
    CHECK(eta == doctest::Approx(0.10299580311455678).epsilon(1e-13));
    CHECK(eta == doctest::Approx(0.1).epsilon(0.05));
    CHECK_THROWS_AS(lamb_dicke(0.0, m, w), std::domain_error);
    CHECK_THROWS_AS(lamb_dicke(k, m, -w), std::domain_error);
}

TEST_CASE("same-species normal modes") {
    auto setup = pair_setup("ca40", "ca40");
    const auto m = normal_modes(setup);
    CHECK(rel_diff(m.omega_ip(), setup.omega0_ion1) < 1e-14);
    CHECK(rel_diff(m.omega_op(), std::sqrt(3.0) * setup.omega0_ion1) < 1e-14);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(m.b[0][0] == doctest::Approx(r).epsilon(1e-14));
    CHECK(m.b[0][1] == doctest::Approx(r).epsilon(1e-14));
    CHECK(m.b[1][0] == doctest::Approx(r).epsilon(1e-14));
    CHECK(m.b[1][1] == doctest::Approx(-r).epsilon(1e-14));
    // mode splitting at mu = 1
    CHECK(rel_diff(m.omega_op() - m.omega_ip(),
                   (std::sqrt(3.0) - 1.0) * setup.omega0_ion1) < 1e-13);
}

TEST_CASE("Yb-Be mode frequencies match the reported values") {
    const auto m = normal_modes(pair_setup("yb171", "be9"));
    CHECK(m.omega_ip() / two_pi == doctest::Approx(1.22e6).epsilon(0.005 / 1.22));
    CHECK(m.omega_op() / two_pi == doctest::Approx(6.21e6).epsilon(0.01 / 6.21));
}

TEST_CASE("analytic modes match the Hessian eigen-oracle") {
    auto check_pair = [&](const TrapSetup& setup, double tol) {
        const auto analytic = normal_modes(setup);
        const auto oracle = oracle::mode_hessian_oracle(setup);
        for (int a = 0; a < 2; ++a) {
            CHECK(rel_diff(analytic.omega[a], oracle.omega[a]) < tol);
            for (int j = 0; j < 2; ++j) {
                CHECK(std::abs(analytic.b[a][j] - oracle.b[a][j]) < tol);
                CHECK(rel_diff(analytic.eta[a][j], oracle.eta[a][j]) < tol);
            }
            CHECK(std::abs(analytic.eta_bar_plus[a] - oracle.eta_bar_plus[a]) < tol);
            CHECK(std::abs(analytic.eta_bar_minus[a] - oracle.eta_bar_minus[a]) < tol);
        }
    };
    check_pair(pair_setup("ca43", "sr88"), 1e-12);
    for (const auto& s1 : builtin_species())
        for (const auto& s2 : builtin_species())
            check_pair(TrapSetup{s1, s2, two_pi * 1e6}, 1e-12);

    // random mass ratios across (0.01, 100]
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> logmu(std::log(0.01), std::log(100.0));
    for (int trial = 0; trial < 500; ++trial) {
        TrapSetup setup = pair_setup("ca40", "ca40");
        setup.ion2.mass = setup.ion1.mass * std::exp(logmu(rng));
        check_pair(setup, 1e-12);
    }
}

TEST_CASE("eigenvector normalization, orthogonality and ordering") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> logmu(std::log(1e-2), std::log(1e2));
    for (int trial = 0; trial < 300; ++trial) {
        TrapSetup setup = pair_setup("ba133", "ba133");
        setup.ion2.mass = setup.ion1.mass * std::exp(logmu(rng));
        const auto m = normal_modes(setup);
        CHECK(m.omega_op() > m.omega_ip());
        CHECK(m.omega_ip() > 0.0);
        for (int a = 0; a < 2; ++a)
            CHECK(std::abs(m.b[a][0] * m.b[a][0] + m.b[a][1] * m.b[a][1] - 1.0) < 1e-12);
        CHECK(std::abs(m.b[0][0] * m.b[1][0] + m.b[0][1] * m.b[1][1]) < 1e-12);
        CHECK(m.b[0][0] > 0.0);
        CHECK(m.b[0][1] > 0.0);
        CHECK(m.b[1][0] > 0.0);
        CHECK(m.b[1][1] < 0.0);
    }
}

TEST_CASE("swapping ion labels leaves the mode pair invariant") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> logmu(std::log(5e-2), std::log(20.0));
    for (int trial = 0; trial < 100; ++trial) {
        TrapSetup fwd = pair_setup("ca43", "sr88");
        fwd.ion2.mass = fwd.ion1.mass * std::exp(logmu(rng));
        TrapSetup swapped{fwd.ion2, fwd.ion1,
                          pseudopotential_frequency(fwd.omega0_ion1, fwd.ion1.mass,
                                                    fwd.ion2.mass),
                          fwd.beam_tilt};
        const auto a = normal_modes(fwd);
        const auto b = normal_modes(swapped);
        CHECK(rel_diff(a.omega_ip(), b.omega_ip()) < 1e-10);
        CHECK(rel_diff(a.omega_op(), b.omega_op()) < 1e-10);
    }
}

TEST_CASE("eta uses each ion's own wavevector and the mode frequency") {
    const auto setup = pair_setup("ca43", "sr88");
    const auto m = normal_modes(setup);
    const double k1 = effective_wavevector(setup.ion1.raman_wavelength, setup.beam_tilt);
    const double k2 = effective_wavevector(setup.ion2.raman_wavelength, setup.beam_tilt);
    for (int a = 0; a < 2; ++a) {
        CHECK(rel_diff(m.eta[a][0], lamb_dicke(k1, setup.ion1.mass, m.omega[a])) < 1e-14);
        CHECK(rel_diff(m.eta[a][1], lamb_dicke(k2, setup.ion2.mass, m.omega[a])) < 1e-14);
        CHECK(std::abs(m.eta_bar_plus[a] -
                       0.5 * (m.b[a][1] * m.eta[a][1] + m.b[a][0] * m.eta[a][0])) < 1e-16);
        CHECK(std::abs(m.eta_bar_minus[a] -
                       0.5 * (m.b[a][1] * m.eta[a][1] - m.b[a][0] * m.eta[a][0])) < 1e-16);
    }
}

TEST_CASE("trap setup validation") {
    auto setup = pair_setup("ca43", "sr88");
    setup.omega0_ion1 = 0.0;
    CHECK_THROWS_AS(normal_modes(setup), std::domain_error);
    setup.omega0_ion1 = two_pi * 1e6;
    setup.beam_tilt = pi / 2;
    CHECK_THROWS_AS(normal_modes(setup), std::domain_error);
    setup.beam_tilt = pi / 4;
    setup.ion2.mass = -1.0;
    CHECK_THROWS_AS(normal_modes(setup), std::domain_error);
}

TEST_CASE("species table: builtins and config file") {
    clear_species_overrides();
    CHECK(lookup_species("ca43").mass == doctest::Approx(42.958766 * atomic_mass_unit));
    CHECK(lookup_species("YB171").raman_wavelength == doctest::Approx(369.5e-9));
    CHECK_THROWS_AS(lookup_species("xe999"), std::out_of_range);

    const char* path = "species_test_table.cfg";
    {
        std::ofstream out(path);
        out << "# test table\n";
        out << "mg24  23.985042  280.3   # custom ion\n";
        out << "ca43  42.958766  397.0\n";  // override wavelength
    }
    const auto loaded = load_species_table(path);
    CHECK(loaded.size() == 2);
    CHECK(lookup_species("mg24").mass == doctest::Approx(23.985042 * atomic_mass_unit));
    CHECK(lookup_species("ca43").raman_wavelength == doctest::Approx(397e-9));
    clear_species_overrides();
    CHECK(lookup_species("ca43").raman_wavelength == doctest::Approx(393e-9));

    {
        std::ofstream out(path);
        out << "broken 1.0\n";
    }
    CHECK_THROWS(load_species_table(path));
    {
        std::ofstream out(path);
        out << "bad -4.0 313\n";
    }
    CHECK_THROWS(load_species_table(path));
    std::remove(path);
    CHECK_THROWS(load_species_table("does_not_exist.cfg"));
}
