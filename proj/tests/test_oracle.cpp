// test_oracle.cpp — exact propagation: conservation, dt/truncation
// convergence, and agreement with the coherent-product engine

#include "cps/oracle.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace cps;
namespace tt = cps::testing;

namespace {

Model number_model(double eps, double j, Complex chi, const BathSpec& bath) {
    Eigen::VectorXd e = Eigen::VectorXd::Constant(2, eps);
    Matrix hop = Matrix::Zero(2, 2);
    hop(0, 1) = -j;
    hop(1, 0) = -j;
    LatticeSpec lat = LatticeSpec::single_excitation(2, e, hop);
    CouplingSet cs;
    for (std::size_t q = 0; q < bath.n_modes(); ++q) cs.w.push_back(chi * lat.total_number());
    return make_model(lat.h_lat(), bath, std::move(cs));
}

} // namespace

TEST_CASE("free eigenstate only rotates its phase") {
    BathSpec bath({{1.0, 4}}, 0.0);
    Model m = number_model(0.8, 0.0, {0.0, 0.0}, bath);

    const Vector psi0 = kron(basis_vector(2, 0), basis_vector(4, 1));
    OracleConfig oc;
    oc.dt = 1e-2;
    oc.sample_stride = 10;
    auto traj = exact_propagate_pure(psi0, m, oc, 2.0);
    for (const auto& psi : traj.states) {
        CHECK(std::abs(std::abs(psi.dot(psi0)) - 1.0) < 1e-12);
    }
}

TEST_CASE("norm and energy conservation for the static propagator") {
    BathSpec bath({{1.3, 6}}, 0.0);
    Model m = number_model(0.5, 0.3, {0.25, 0.1}, bath);
    const Matrix h = m.full_hamiltonian();

    auto gen = tt::rng(71);
    Vector psi0 = tt::random_state(12, gen);
    OracleConfig oc;
    oc.dt = 1e-3;
    oc.sample_stride = 200;
    auto traj = exact_propagate_pure(psi0, m, oc, 3.0);
    const Complex e0 = (psi0.adjoint() * h * psi0)(0, 0);
    for (const auto& psi : traj.states) {
        CHECK(std::abs(psi.norm() - 1.0) < 1e-10);
        const Complex e = (psi.adjoint() * h * psi)(0, 0);
        CHECK(std::abs(e - e0) / std::abs(e0) < 1e-10);
    }
}

TEST_CASE("halving dt barely moves the static-propagator endpoint") {
    BathSpec bath({{1.0, 5}}, 0.0);
    Model m = number_model(0.4, 0.2, {0.3, 0.0}, bath);
    auto gen = tt::rng(72);
    Vector psi0 = tt::random_state(10, gen);

    OracleConfig coarse;
    coarse.dt = 2e-3;
    coarse.sample_stride = 1 << 20;
    OracleConfig fine;
    fine.dt = 1e-3;
    fine.sample_stride = 1 << 20;
    const Vector end_coarse = exact_propagate_pure(psi0, m, coarse, 2.0).states.back();
    const Vector end_fine = exact_propagate_pure(psi0, m, fine, 2.0).states.back();
    CHECK(std::abs(std::abs(end_coarse.dot(end_fine)) - 1.0) < 1e-10);
}

TEST_CASE("midpoint stepping converges for a time-dependent Hamiltonian") {
    // N = 2 pumped ring, small bosonic site spaces.
    const Index n = 2;
    Eigen::VectorXd e = Eigen::VectorXd::Constant(n, 1.0);
    Matrix hop = Matrix::Zero(n, n);
    hop(0, 1) = -0.4;
    hop(1, 0) = -0.4;
    LatticeSpec lat = LatticeSpec::bosonic(n, e, hop, 4);
    BathSpec bath({{1.0, 3}, {1.0, 3}}, 0.0);
    PumpSpec pump;
    pump.eps = 1.0;
    pump.J = 0.2;
    pump.zeta0 = {Complex{0.1, 0.0}, Complex{0.0, 0.1}};
    Model m = build_pumped_frohlich(lat, bath, {Complex{0.2, 0.0}, Complex{0.2, 0.0}}, pump);

    auto gen = tt::rng(73);
    Vector psi0 = tt::random_state(m.space().total_dim(), gen);
    OracleConfig coarse;
    coarse.dt = 2e-3;
    coarse.sample_stride = 1 << 20;
    OracleConfig fine;
    fine.dt = 1e-3;
    fine.sample_stride = 1 << 20;
    const Vector end_coarse = exact_propagate_pure(psi0, m, coarse, 1.0).states.back();
    const Vector end_fine = exact_propagate_pure(psi0, m, fine, 1.0).states.back();
    CHECK(std::abs(std::abs(end_coarse.dot(end_fine)) - 1.0) < 1e-8);
}

TEST_CASE("RK4 integrator with stability guard") {
    BathSpec bath({{1.0, 4}}, 0.0);
    Model m = number_model(0.4, 0.2, {0.2, 0.0}, bath);
    auto gen = tt::rng(74);
    Vector psi0 = tt::random_state(8, gen);

    OracleConfig rk;
    rk.dt = 1e-3;
    rk.integrator = OracleIntegrator::RK4;
    rk.sample_stride = 1 << 20;
    OracleConfig ex;
    ex.dt = 1e-3;
    ex.sample_stride = 1 << 20;
    const Vector end_rk = exact_propagate_pure(psi0, m, rk, 1.0).states.back();
    const Vector end_ex = exact_propagate_pure(psi0, m, ex, 1.0).states.back();
    CHECK((end_rk - end_ex).norm() < 1e-9);

    OracleConfig unstable;
    unstable.dt = 0.5;
    unstable.integrator = OracleIntegrator::RK4;
    CHECK_THROWS_AS(exact_propagate_pure(psi0, m, unstable, 1.0), std::invalid_argument);
}

TEST_CASE("density propagation preserves trace, Hermiticity, spectrum, purity") {
    BathSpec bath({{1.0, 18}}, 0.7);
    Model m = number_model(0.5, 0.25, {0.3, 0.0}, bath);

    // rho0 = random lattice density ⊗ thermal
    auto gen = tt::rng(75);
    const Matrix rho_lat = tt::random_density(2, gen);
    const Matrix rho0 = kron(rho_lat, thermal_density(bath, 0));

    OracleConfig oc;
    oc.dt = 1e-3;
    oc.sample_stride = 300;
    auto traj = exact_propagate_density(rho0, m, oc, 2.0);

    Eigen::SelfAdjointEigenSolver<Matrix> es0(rho0);
    const double purity0 = (rho0 * rho0).trace().real();
    for (const auto& rho : traj.rhos) {
        CHECK(std::abs(rho.trace() - Complex{1.0, 0.0}) < 1e-10);
        CHECK(is_hermitian(rho, 1e-10));
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
        CHECK((es.eigenvalues() - es0.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(std::abs((rho * rho).trace().real() - purity0) < 1e-10);
    }
}

TEST_CASE("density propagation validates its input") {
    BathSpec bath({{1.0, 4}}, 0.0);
    Model m = number_model(0.5, 0.2, {0.2, 0.0}, bath);
    auto gen = tt::rng(76);

    Matrix bad = tt::random_matrix(8, gen); // not Hermitian
    CHECK_THROWS_AS(exact_propagate_density(bad, m, {}, 1.0), std::invalid_argument);

    Matrix neg = Matrix::Zero(8, 8); // Hermitian, unit trace, not PSD
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(exact_propagate_density(neg, m, {}, 1.0), std::invalid_argument);
}

TEST_CASE("coherent-product state matches the oracle in a DFS model") {
    const double omega = 1.0;
    const Complex chi{0.3, 0.0};
    BathSpec bath({{omega, 18}}, 0.0);
    Model m = number_model(0.5, 0.25, chi, bath);

    auto gen = tt::rng(77);
    const Vector v0 = tt::random_state(2, gen);
    CoherentProductState state;
    state.bath = bath;
    state.branches.push_back(Branch::pure_state("b", v0, Displacement::zero(1), {chi}));

    const double dt = 1e-3, t_final = 4.0;
    const int n_steps = static_cast<int>(std::lround(t_final / dt));
    PropagateOptions popts;
    popts.sample_stride = 400;
    TrajectoryRecord rec = propagate_state(state, m, dt, n_steps, popts);
    REQUIRE_FALSE(rec.aborted());

    OracleConfig oc;
    oc.dt = dt;
    oc.sample_stride = 400;
    // pure-state cross-check: fidelity against the assembled state
    auto pure_traj = exact_propagate_pure(
        kron(v0, coherent_state({0.0, 0.0}, bath.modes[0])), m, oc, t_final);
    for (std::size_t s = 0; s < rec.times.size(); ++s) {
        CoherentProductState snap = state_at_sample(state, rec, s);
        const Matrix rho = assemble_density(snap).full;
        const Vector psi = pure_traj.states[s];
        const double fid = ((psi.adjoint() * rho * psi)(0, 0)).real();
        CHECK(fid > 1.0 - 1e-8);
        CHECK(compare_reduced(psi * psi.adjoint(), snap, {0}) < 1e-8);
        CHECK(compare_reduced(psi * psi.adjoint(), snap, {1}) < 1e-8);
    }
}

TEST_CASE("oracle divergence grows for a forced non-eigenstate branch") {
    // Negative control: site-resolved couplings + hopping, site state forced
    // through the engine; the oracle drifts away from the assembled state.
    BathSpec bath({{1.0, 10}}, 0.0);
    Eigen::VectorXd e = Eigen::VectorXd::Constant(2, 0.5);
    Matrix hop = Matrix::Zero(2, 2);
    hop(0, 1) = -0.3;
    hop(1, 0) = -0.3;
    LatticeSpec lat = LatticeSpec::single_excitation(2, e, hop);
    CouplingSet cs;
    Matrix w = Matrix::Zero(2, 2);
    w(0, 0) = 0.4;
    w(1, 1) = -0.4;
    cs.w.push_back(w);
    Model m = make_model(lat.h_lat(), bath, std::move(cs));

    CoherentProductState state;
    state.bath = bath;
    state.branches.push_back(Branch::pure_state("s", basis_vector(2, 0),
                                                Displacement::zero(1), {Complex{0.4, 0.0}}));

    const double dt = 1e-3;
    const int n_steps = 600;
    PropagateOptions opts;
    opts.sample_stride = 100;
    opts.force_uncertified = true;
    opts.abort_tol = 1e9; // keep integrating to watch the divergence window
    TrajectoryRecord rec = propagate_state(state, m, dt, n_steps, opts);

    OracleConfig oc;
    oc.dt = dt;
    oc.sample_stride = 100;
    auto oracle = exact_propagate_density(assemble_density(state).full, m, oc, n_steps * dt);

    std::vector<double> dist;
    for (std::size_t s = 0; s < rec.times.size(); ++s) {
        dist.push_back(compare_reduced(oracle.rhos[s], state_at_sample(state, rec, s), {0}));
    }
    CHECK(dist.front() < 1e-12);
    CHECK(dist.back() > 10.0 * (dist[1] + 1e-15));
    CHECK(dist.back() > 1e-5);
}

TEST_CASE("raising the truncation barely moves the reduced matrices") {
    auto make = [](Index n_cut) {
        BathSpec bath({{1.0, n_cut}}, 0.5);
        return number_model(0.5, 0.25, {0.3, 0.0}, bath);
    };
    const Model coarse = make(18);
    const Model fine = make(23);

    auto run = [](const Model& m, Index n_cut) {
        Matrix rho_lat = Matrix::Zero(2, 2);
        rho_lat(0, 0) = 0.64;
        rho_lat(1, 1) = 0.36;
        rho_lat(0, 1) = 0.48;
        rho_lat(1, 0) = 0.48;
        const Matrix rho0 = kron(rho_lat, thermal_density(m.bath, 0));
        OracleConfig oc;
        oc.dt = 2e-3;
        oc.sample_stride = 1 << 20;
        auto traj = exact_propagate_density(rho0, m, oc, 5.0);
        ProductSpace sp({{"lattice", 2}, {"mode0", n_cut}});
        return partial_trace(traj.rhos.back(), sp, {0});
    };
    CHECK(trace_distance(run(coarse, 18), run(fine, 23)) < 1e-9);
}

TEST_CASE("time-dependent density stepping agrees with the pure-state path") {
    const Index n = 2;
    Eigen::VectorXd e = Eigen::VectorXd::Constant(n, 1.0);
    Matrix hop = Matrix::Zero(n, n);
    hop(0, 1) = -0.4;
    hop(1, 0) = -0.4;
    LatticeSpec lat = LatticeSpec::bosonic(n, e, hop, 3);
    BathSpec bath({{1.0, 3}, {1.0, 3}}, 0.0);
    PumpSpec pump;
    pump.eps = 1.0;
    pump.J = 0.2;
    pump.zeta0 = {Complex{0.1, 0.0}, Complex{0.0, 0.1}};
    Model m = build_pumped_frohlich(lat, bath, {Complex{0.2, 0.0}, Complex{0.2, 0.0}}, pump);

    auto gen = tt::rng(78);
    const Vector psi0 = tt::random_state(m.space().total_dim(), gen);
    OracleConfig oc;
    oc.dt = 1e-3;
    oc.sample_stride = 200;
    auto pure = exact_propagate_pure(psi0, m, oc, 0.6);
    auto dens = exact_propagate_density(psi0 * psi0.adjoint(), m, oc, 0.6);
    for (std::size_t s = 0; s < pure.times.size(); ++s) {
        const Matrix expect = pure.states[s] * pure.states[s].adjoint();
        CHECK(max_abs(dens.rhos[s] - expect) < 1e-10);
    }
}
