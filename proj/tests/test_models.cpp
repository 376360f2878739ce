// test_models.cpp — Hamiltonian families against hand-assembled matrices

#include "cps/models.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <numbers>

using namespace cps;
namespace tt = cps::testing;

namespace {

LatticeSpec ring(Index n, double eps, double j, bool vacuum = false) {
    Eigen::VectorXd e = Eigen::VectorXd::Constant(n, eps);
    Matrix hop = Matrix::Zero(n, n);
    for (Index s = 0; s + 1 < n; ++s) {
        hop(s, s + 1) = -j;
        hop(s + 1, s) = -j;
    }
    if (n > 2 && j != 0.0) {
        hop(0, n - 1) = -j;
        hop(n - 1, 0) = -j;
    }
    return LatticeSpec::single_excitation(n, e, hop, vacuum);
}

} // namespace

TEST_CASE("lattice operators in the single-excitation sector") {
    LatticeSpec lat = ring(3, 0.5, 0.2);
    CHECK(lat.dim() == 3);
    CHECK(max_abs(lat.total_number() - identity(3)) == 0.0);
    CHECK_THROWS_AS(lat.lower_op(0), std::logic_error);

    LatticeSpec with_vac = ring(3, 0.5, 0.2, true);
    CHECK(with_vac.dim() == 4);
    const Matrix c0 = with_vac.lower_op(0);
    CHECK(std::abs(c0(3, 0) - Complex{1.0, 0.0}) == 0.0);
    CHECK(max_abs(c0.adjoint() * c0 - with_vac.number_op(0)) == 0.0);
}

TEST_CASE("bosonic lattice operators commute across sites") {
    Eigen::VectorXd e(2);
    e << 0.3, 0.7;
    LatticeSpec lat = LatticeSpec::bosonic(2, e, Matrix::Zero(2, 2), 4);
    CHECK(lat.dim() == 16);
    CHECK(max_abs(commutator(lat.lower_op(0), lat.lower_op(1))) == 0.0);
    CHECK(max_abs(commutator(lat.lower_op(0), lat.lower_op(1).adjoint())) == 0.0);
    const Matrix n0 = lat.number_op(0);
    CHECK(max_abs(n0 - lat.lower_op(0).adjoint() * lat.lower_op(0)) < 1e-14);
}

TEST_CASE("number-coupled model: full Hamiltonian matches hand assembly") {
    // 2 sites, single excitation, 1 mode: assemble the full matrix by hand.
    const double eps = 0.5, j = 0.25, omega = 1.3;
    const Complex chi{0.2, 0.1};
    const Index n_cut = 4;

    LatticeSpec lat = ring(2, eps, j);
    BathSpec bath({{omega, n_cut}}, 0.0);
    Matrix chi_table(1, 2);
    chi_table << chi, chi; // site-independent
    Model m = build_frohlich(lat, bath, chi_table);

    auto [b, bdag] = boson_ladder(n_cut);
    const Matrix h_lat = eps * identity(2) + [&] {
        Matrix hop = Matrix::Zero(2, 2);
        hop(0, 1) = -j;
        hop(1, 0) = -j;
        return hop;
    }();
    Matrix expected = kron(h_lat, identity(n_cut)) + kron(identity(2), omega * bdag * b) +
                      kron((omega * chi * identity(2)).eval(), bdag) +
                      kron((omega * std::conj(chi) * identity(2)).eval(), b);
    CHECK(max_abs(m.full_hamiltonian() - expected) < 1e-13);
    CHECK(is_hermitian(m.full_hamiltonian(), 1e-13));
}

TEST_CASE("zero coupling decouples lattice and phonons") {
    LatticeSpec lat = ring(3, 1.0, 0.4);
    BathSpec bath({{1.0, 3}, {2.0, 3}}, 0.0);
    Model m = build_frohlich(lat, bath, Matrix::Zero(2, 3));
    for (std::size_t q = 0; q < 2; ++q) CHECK(max_abs(m.couplings.w_static(q)) == 0.0);

    // spectrum = lattice eigenvalues + phonon level sums
    Eigen::SelfAdjointEigenSolver<Matrix> lat_es(m.h_lat);
    std::vector<double> expected;
    for (Index k = 0; k < 3; ++k) {
        for (Index n1 = 0; n1 < 3; ++n1) {
            for (Index n2 = 0; n2 < 3; ++n2) {
                expected.push_back(lat_es.eigenvalues()(k) + 1.0 * n1 + 2.0 * n2);
            }
        }
    }
    std::sort(expected.begin(), expected.end());
    Eigen::SelfAdjointEigenSolver<Matrix> full_es(m.full_hamiltonian());
    for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(full_es.eigenvalues()(static_cast<Index>(k)) ==
              doctest::Approx(expected[k]).epsilon(1e-12));
    }
}

TEST_CASE("Davydov-form couplings are diagonal in the site basis") {
    const Index n = 4;
    LatticeSpec lat = ring(n, 0.0, 0.1);
    BathSpec bath({{1.0, 2}}, 0.0);
    Matrix chi_table(1, n);
    const double q = 2.0 * std::numbers::pi / n;
    for (Index s = 0; s < n; ++s) chi_table(0, s) = 0.3 * std::exp(iunit * q * double(s));
    Model m = build_frohlich(lat, bath, chi_table);
    const Matrix w = m.couplings.w_static(0);
    for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < n; ++c) {
            if (r != c) CHECK(std::abs(w(r, c)) == 0.0);
        }
    }
}

TEST_CASE("hopping-coupled commutator reproduces the closed form") {
    const Index n = 5;
    LatticeSpec lat = ring(n, 0.0, 0.0);
    BathSpec bath({{1.7, 2}, {1.7, 2}}, 0.0);

    auto gen = tt::rng(41);
    for (int rep = 0; rep < 5; ++rep) {
        const Complex chi1 = tt::random_complex(gen);
        const Complex chi2 = tt::random_complex(gen);
        Model m = build_hopping_coupled(lat, bath, {chi1, chi1}, {chi2, chi2});
        for (std::size_t k = 0; k < 2; ++k) {
            const double q = 2.0 * std::numbers::pi * double(k) / double(n);
            const Matrix w = m.couplings.w_static(k);
            const Matrix lhs = commutator(w, w.adjoint());
            const Matrix rhs = hopping_coupled_commutator(lat, 1.7, chi1, chi2, q);
            CHECK(max_abs(lhs - rhs) < 1e-12);
        }
        // q = 0: both closed-form coefficients vanish
        CHECK(max_abs(commutator(m.couplings.w_static(0),
                                 m.couplings.w_static(0).adjoint())) < 1e-12);
    }
}

TEST_CASE("hopping-coupled reduces to the number-coupled family at chi2 = 0") {
    const Index n = 4;
    LatticeSpec lat = ring(n, 0.2, 0.3);
    BathSpec bath({{1.0, 2}}, 0.0);
    const Complex chi1{0.4, -0.2};
    Model hop = build_hopping_coupled(lat, bath, {chi1}, {Complex{0.0, 0.0}});

    Matrix chi_table(1, n);
    for (Index s = 0; s < n; ++s) chi_table(0, s) = chi1; // q = 0 phases are 1
    Model froh = build_frohlich(lat, bath, chi_table);
    CHECK(max_abs(hop.couplings.w_static(0) - froh.couplings.w_static(0)) < 1e-14);
}

TEST_CASE("dimer transformation: renormalized energies and unitary equivalence") {
    BathSpec bath({{1.0, 8}}, 0.0);
    DimerModel dm = build_dimer(1.0, 0.3, {Complex{0.2, 0.0}}, {Complex{0.1, 0.05}}, bath);

    CHECK(dm.eps_normal(1) == doctest::Approx(0.7));
    CHECK(dm.eps_normal(2) == doctest::Approx(1.3));
    CHECK(std::abs(dm.chi_normal(1, 0) - Complex{0.1, -0.05}) < 1e-15);
    CHECK(std::abs(dm.chi_normal(2, 0) - Complex{0.3, 0.05}) < 1e-15);

    // lambda = 0: both transformed couplings equal chi
    DimerModel sym = build_dimer(1.0, 0.3, {Complex{0.2, 0.0}}, {Complex{0.0, 0.0}}, bath);
    CHECK(sym.chi_normal(1, 0) == sym.chi_normal(2, 0));

    // U† H_site U = H_normal with the lattice rotation extended by identity
    const Matrix u_full = kron(dm.lattice_rotation, identity(8));
    const Matrix transformed = u_full.adjoint() * dm.site_form.full_hamiltonian() * u_full;
    CHECK(max_abs(transformed - dm.normal_form.full_hamiltonian()) < 1e-12);

    // the interaction never moves quanta between the normal modes
    for (int j = 0; j < 2; ++j) {
        Matrix njbar = Matrix::Zero(2, 2);
        njbar(j, j) = 1.0;
        const Matrix full_nj = kron(njbar, identity(8));
        CHECK(max_abs(commutator(dm.normal_form.full_hamiltonian(), full_nj)) < 1e-12);
    }
}

TEST_CASE("pumped model: displacements solve the discrete ring equation") {
    const Index n = 6;
    const double eps = 1.1, j = 0.4;
    PumpSpec pump;
    pump.eps = eps;
    pump.J = j;
    pump.zeta0.assign(n, Complex{0.0, 0.0});
    pump.zeta0[1] = Complex{0.2, 0.0};
    pump.zeta0[3] = Complex{0.0, -0.1};

    // finite-difference d zeta/dt vs -i [eps zeta_n - J (zeta_{n-1} + zeta_{n+1})]
    const double t = 0.7, h = 1e-4;
    const auto z = pump_lattice_displacements(pump, eps, j, t);
    const auto zp = pump_lattice_displacements(pump, eps, j, t + h);
    const auto zm = pump_lattice_displacements(pump, eps, j, t - h);
    double max_err = 0.0;
    for (Index s = 0; s < n; ++s) {
        const Complex dz = (zp[s] - zm[s]) / (2.0 * h);
        const Complex rhs = -iunit * (eps * z[s] - j * (z[(s + n - 1) % n] + z[(s + 1) % n]));
        max_err = std::max(max_err, std::abs(dz - rhs));
    }
    CHECK(max_err < 1e-8);

    // J = 0: pure phase rotation of the initial profile
    const auto z0 = pump_lattice_displacements(pump, eps, 0.0, 0.0);
    const auto zt = pump_lattice_displacements(pump, eps, 0.0, 1.3);
    for (Index s = 0; s < n; ++s) {
        CHECK(std::abs(zt[s] - z0[s] * std::exp(-iunit * eps * 1.3)) < 1e-13);
    }
}

TEST_CASE("pumped drive obeys the ring selection rule") {
    const std::size_t n = 8;
    const std::size_t qi = 1; // pump wavevector index
    PumpSpec pump;
    pump.eps = 1.0;
    pump.J = 0.2;
    pump.zeta0.assign(n, Complex{0.0, 0.0});
    const Complex zp{0.3, 0.0}, zm{0.1, -0.2};
    pump.zeta0[qi] = zp;
    pump.zeta0[n - qi] = zm;

    std::vector<Complex> chi(n, Complex{0.25, 0.0});
    const auto zeta = pump_lattice_displacements(pump, pump.eps, pump.J, 0.83);
    const auto drive = pump_phonon_drive(chi, zeta);

    // |zeta_n(t)|^2 is time independent for the single-Q pump
    const auto zeta2 = pump_lattice_displacements(pump, pump.eps, pump.J, 2.11);
    for (std::size_t s = 0; s < n; ++s) {
        CHECK(std::abs(zeta[s]) == doctest::Approx(std::abs(zeta2[s])).epsilon(1e-12));
    }

    const std::size_t q2 = (2 * qi) % n, q2c = (n - q2) % n;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 0 || k == q2 || k == q2c) continue;
        CHECK(std::abs(drive[k]) < 1e-13);
    }
    const double nn = static_cast<double>(n);
    CHECK(std::abs(drive[0] - chi[0] * nn * (std::norm(zp) + std::norm(zm))) < 1e-12);
    CHECK(std::abs(drive[q2] - chi[q2] * nn * zp * std::conj(zm)) < 1e-12);
    CHECK(std::abs(drive[q2c] - chi[q2c] * nn * std::conj(zp) * zm) < 1e-12);

    // zeta = 0 gives zero drive
    const auto none = pump_phonon_drive(chi, std::vector<Complex>(n, Complex{0.0, 0.0}));
    for (const auto& d : none) CHECK(std::abs(d) == 0.0);
}

TEST_CASE("pumped model couplings: w_q(t) has the coherent state as eigenvector") {
    // Small bosonic ring: N = 2 sites, acoustic pair of modes. At N = 2 the
    // ring bond carries -2J (both neighbors coincide).
    const Index n = 2;
    Eigen::VectorXd e = Eigen::VectorXd::Constant(n, 1.0);
    Matrix hop = Matrix::Zero(n, n);
    hop(0, 1) = -0.4;
    hop(1, 0) = -0.4;
    LatticeSpec lat = LatticeSpec::bosonic(n, e, hop, 8);
    BathSpec bath({{1.0, 2}, {1.0, 2}}, 0.0);

    PumpSpec pump;
    pump.eps = 1.0;
    pump.J = 0.2;
    pump.zeta0 = {Complex{0.12, 0.0}, Complex{0.0, 0.08}};
    std::vector<Complex> chi{Complex{0.3, 0.0}, Complex{0.3, 0.0}};
    Model m = build_pumped_frohlich(lat, bath, chi, pump);

    const double t = 0.55;
    const auto zeta = pump_lattice_displacements(pump, pump.eps, pump.J, t);
    // |alpha(t)> = exp[-sum_n (zeta_n c_n† - zeta_n* c_n)] |0>
    Matrix gen = Matrix::Zero(lat.dim(), lat.dim());
    for (Index s = 0; s < n; ++s) {
        gen += -zeta[s] * lat.lower_op(s).adjoint() + std::conj(zeta[s]) * lat.lower_op(s);
    }
    Vector alpha = matrix_exponential(gen) * basis_vector(lat.dim(), 0);

    const auto drive = pumped_drive_at(m, t);
    for (std::size_t q = 0; q < 2; ++q) {
        const Matrix wq = m.couplings.w_at(q, t);
        const Complex mu = -bath.modes[q].omega * drive[q];
        CHECK((wq * alpha - mu * alpha).norm() < 1e-9);
    }
}

TEST_CASE("coupling validation rejects bad bilinear tables") {
    LatticeSpec lat = ring(2, 0.0, 0.0);
    BathSpec warm({{1.0, 12}}, 0.5);
    CouplingSet cs;
    cs.w.push_back(lat.total_number());
    cs.u.assign(1, std::vector<Matrix>(1, identity(2)));
    CHECK_THROWS_WITH_AS(make_model(lat.h_lat(), warm, cs),
                         doctest::Contains("zero temperature"), std::invalid_argument);

    BathSpec cold({{1.0, 12}}, 0.0);
    CouplingSet bad;
    bad.w.push_back(lat.total_number());
    Matrix u(2, 2);
    u << 0.0, 1.0, 0.0, 0.0; // not Hermitian-paired with itself
    bad.u.assign(1, std::vector<Matrix>(1, u));
    CHECK_THROWS_WITH_AS(make_model(lat.h_lat(), cold, bad), doctest::Contains("pairing"),
                         std::invalid_argument);
}
