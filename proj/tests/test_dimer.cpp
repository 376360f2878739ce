// test_dimer.cpp — dimer dephasing closed forms against the overlap machinery
// and explicit basis rotations

#include "cps/dimer.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace cps;
namespace tt = cps::testing;

namespace {

DimerState equilibrium_state(std::size_t n_modes) {
    DimerState st;
    st.beta1 = Displacement::zero(n_modes);
    st.beta2 = Displacement::zero(n_modes);
    return st;
}

} // namespace

TEST_CASE("relaxation exponent: zero at t = 0 and for lambda = 0, periodic") {
    BathSpec bath({{1.3, 20}}, 0.5);
    const std::vector<Complex> lam{Complex{0.25, 0.1}};
    CHECK(gamma_relaxation(0.0, lam, bath) == 0.0);
    CHECK(gamma_relaxation(4.2, {Complex{0.0, 0.0}}, bath) == 0.0);

    for (double t : {0.3, 1.1, 2.9}) {
        CHECK(gamma_relaxation(t, lam, bath) >= 0.0);
        const double period = 2.0 * std::numbers::pi / 1.3;
        CHECK(gamma_relaxation(t + period, lam, bath) ==
              doctest::Approx(gamma_relaxation(t, lam, bath)).epsilon(1e-12));
    }
}

TEST_CASE("relaxation exponent equals the overlap exponent on the trajectory") {
    // beta_j(t) = (chi_j/omega)(e^{-i omega t} - 1) with chi_2 - chi_1 = 2 lambda
    const double omega = 1.0, T = 1.0;
    BathSpec bath({{omega, 30}}, T);
    const Complex chi{0.1, 0.0}, lam{0.3, 0.0};
    DimerModel dm = build_dimer(1.0, 0.3, {chi}, {lam}, bath);

    for (double t : {0.0, 0.5, 1.7, 6.4, 19.0}) {
        Displacement b1({dm.chi_normal(1, 0) / omega *
                         (std::exp(-iunit * omega * t) - 1.0)});
        Displacement b2({dm.chi_normal(2, 0) / omega *
                         (std::exp(-iunit * omega * t) - 1.0)});
        const double from_overlap = gaussian_overlap_exponent(b1, b2, bath);
        CHECK(std::abs(from_overlap - gamma_relaxation(t, {lam}, bath)) < 1e-12);
    }
}

TEST_CASE("dimer coherence: orthogonal co-states kill it, equilibrium decay law") {
    const double omega = 1.0;
    BathSpec bath({{omega, 25}}, 0.8);
    DimerModel dm = build_dimer(1.0, 0.2, {Complex{0.15, 0.0}}, {Complex{0.2, 0.0}}, bath);

    DimerState st = equilibrium_state(1);
    st.overlap_phi = {0.0, 0.0};
    CHECK(std::abs(dimer_coherence(1.3, st, dm, bath)) == 0.0);

    DimerState eq = equilibrium_state(1);
    const double c0 = std::abs(dimer_coherence(0.0, eq, dm, bath));
    CHECK(c0 == doctest::Approx(0.5).epsilon(1e-12));
    for (double t : {0.4, 1.9, 5.5}) {
        const double expected =
            c0 * std::exp(-gamma_relaxation(t, dm.lambda, bath));
        CHECK(std::abs(dimer_coherence(t, eq, dm, bath)) ==
              doctest::Approx(expected).epsilon(1e-11));
    }
}

TEST_CASE("stationary displacements rotate the coherence without decay") {
    const double omega = 1.0;
    BathSpec bath({{omega, 25}}, 0.6);
    const Complex chi{0.2, 0.0}, lam{0.1, 0.0};
    DimerModel dm = build_dimer(1.0, 0.0, {chi}, {lam}, bath); // J = 0

    DimerState st;
    st.beta1 = Displacement({-dm.chi_normal(1, 0) / omega});
    st.beta2 = Displacement({-dm.chi_normal(2, 0) / omega});

    const double d_omega = delta_omega({chi}, {lam}, {omega});
    const Complex c0 = dimer_coherence(0.0, st, dm, bath);
    for (double t : {0.7, 2.3, 9.1}) {
        const Complex c = dimer_coherence(t, st, dm, bath);
        CHECK(std::abs(c) == doctest::Approx(std::abs(c0)).epsilon(1e-12));
        // phi_1 phi_2* rotates at (eps_2 - eps_1) - DeltaOmega = -DeltaOmega here
        const Complex expected = c0 * std::exp(-iunit * d_omega * t);
        CHECK(std::abs(c - expected) < 1e-11);
    }
}

TEST_CASE("energy-shift splitting in closed form") {
    CHECK(delta_omega({Complex{0.3, 0.0}}, {Complex{0.0, 0.0}}, {1.0}) == 0.0);

    // Omega_2 - Omega_1 computed from energy_shift at the stationary points
    // is the oracle for the closed form.
    auto gen = tt::rng(81);
    for (int rep = 0; rep < 10; ++rep) {
        const Complex chi = tt::random_complex(gen);
        const Complex lam = tt::random_complex(gen);
        const double omega = 0.5 + std::abs(tt::random_complex(gen));
        const Complex mu1 = chi - lam, mu2 = chi + lam;
        const double om1 = energy_shift({mu1}, Displacement({-mu1 / omega}));
        const double om2 = energy_shift({mu2}, Displacement({-mu2 / omega}));
        CHECK(delta_omega({chi}, {lam}, {omega}) ==
              doctest::Approx(om2 - om1).epsilon(1e-12));
    }

    // single mode, real chi = 0.2, lambda = 0.1, omega = 1:
    // |chi+lam|^2 - |chi-lam|^2 = 0.08
    CHECK(delta_omega({Complex{0.2, 0.0}}, {Complex{0.1, 0.0}}, {1.0}) ==
          doctest::Approx(0.08).epsilon(1e-14));
}

TEST_CASE("site-basis reduction against the explicit rotation") {
    auto gen = tt::rng(82);
    DimerState st;
    for (int rep = 0; rep < 10; ++rep) {
        Matrix rho = tt::random_density(2, gen);
        Matrix v(2, 2);
        const double s = 1.0 / std::sqrt(2.0);
        v << s, s, s, -s;
        const Matrix expect = v.adjoint() * rho * v;
        CHECK(max_abs(site_basis_density(rho, st) - expect) < 1e-13);
    }

    // zero normal-basis coherence and equal weights: maximally mixed in the
    // site basis with no site coherence
    Matrix diag_half = 0.5 * identity(2);
    const Matrix site = site_basis_density(diag_half, st);
    CHECK(max_abs(site - 0.5 * identity(2)) < 1e-15);

    // equal weights with purely real normal coherence: site populations split,
    // site coherence stays zero
    Matrix rho(2, 2);
    rho << 0.5, 0.2, 0.2, 0.5;
    const Matrix site2 = site_basis_density(rho, st);
    CHECK(std::abs(site2(0, 1)) < 1e-15);
    CHECK(site2(0, 0).real() == doctest::Approx(0.7));
    CHECK(site2(1, 1).real() == doctest::Approx(0.3));
}

TEST_CASE("equilibrium-start coherence never exceeds its initial magnitude") {
    BathSpec bath({{1.0, 25}, {1.7, 25}}, 0.9);
    DimerModel dm = build_dimer(1.0, 0.25, {Complex{0.1, 0.0}, Complex{0.05, 0.02}},
                                {Complex{0.25, 0.0}, Complex{0.1, -0.1}}, bath);
    DimerState eq = equilibrium_state(2);
    const double c0 = std::abs(dimer_coherence(0.0, eq, dm, bath));
    for (int k = 1; k <= 40; ++k) {
        const double t = 0.5 * k;
        CHECK(std::abs(dimer_coherence(t, eq, dm, bath)) <= c0 + 1e-12);
    }
}

TEST_CASE("branch populations are invariant in time") {
    BathSpec bath({{1.0, 25}}, 0.7);
    DimerModel dm = build_dimer(1.0, 0.3, {Complex{0.1, 0.0}}, {Complex{0.3, 0.0}}, bath);
    DimerState st = equilibrium_state(1);
    st.phi1 = Complex{0.6, 0.0};
    st.phi2 = Complex{0.0, 0.8};
    for (double t : {0.7, 3.1, 12.9}) {
        const DimerState now = dimer_state_at(t, st, dm, bath);
        CHECK(std::abs(now.phi1) == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(std::abs(now.phi2) == doctest::Approx(0.8).epsilon(1e-12));
    }
}
