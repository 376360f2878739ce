// oracle.cpp — exact truncated-Fock propagation

#include "cps/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cps {

namespace {

int step_count(double t_final, double dt) {
    if (dt <= 0.0 || t_final < 0.0) {
        throw std::invalid_argument("oracle: need dt > 0 and t_final >= 0");
    }
    return static_cast<int>(std::llround(t_final / dt));
}

void check_rk4_guard(const Matrix& h, double dt) {
    // Stability guard dt * ||H|| < 0.1 (spectral norm bounded by Frobenius).
    const double bound = dt * h.norm();
    if (bound >= 0.1) {
        std::ostringstream msg;
        msg << "oracle: RK4 stability guard violated (dt*||H|| = " << bound << " >= 0.1)";
        throw std::invalid_argument(msg.str());
    }
}

Vector rk4_state_step(const Matrix& h_t, const Matrix& h_mid, const Matrix& h_end,
                      const Vector& psi, double dt) {
    const Vector k1 = -iunit * (h_t * psi);
    const Vector k2 = -iunit * (h_mid * (psi + 0.5 * dt * k1));
    const Vector k3 = -iunit * (h_mid * (psi + 0.5 * dt * k2));
    const Vector k4 = -iunit * (h_end * (psi + dt * k3));
    return psi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace

PureTrajectory exact_propagate_pure(const Vector& psi0, const Model& model,
                                    const OracleConfig& config, double t_final) {
    const ProductSpace sp = model.space();
    if (psi0.size() != sp.total_dim()) {
        throw std::invalid_argument("exact_propagate_pure: state dimension mismatch");
    }
    if (std::abs(psi0.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("exact_propagate_pure: state must be normalized");
    }
    const int n_steps = step_count(t_final, config.dt);
    const bool time_dep = model.couplings.time_dependent();
    const OracleIntegrator integ =
        (config.integrator == OracleIntegrator::ExponentialStep && time_dep)
            ? OracleIntegrator::Midpoint
            : config.integrator;

    Matrix u_static;
    if (integ == OracleIntegrator::ExponentialStep) {
        u_static = tighten_unitary(hermitian_propagator(model.full_hamiltonian(0.0), config.dt));
    } else if (integ == OracleIntegrator::RK4) {
        check_rk4_guard(model.full_hamiltonian(0.0), config.dt);
    }

    PureTrajectory traj;
    Vector psi = psi0;
    for (int step = 0; step <= n_steps; ++step) {
        const double t = step * config.dt;
        if (step % config.sample_stride == 0 || step == n_steps) {
            traj.times.push_back(t);
            traj.states.push_back(psi);
        }
        const double drift = std::abs(psi.norm() - 1.0);
        if (drift > config.norm_abort) {
            std::ostringstream msg;
            msg << "exact_propagate_pure: norm drift " << drift << " at t = " << t;
            throw std::runtime_error(msg.str());
        }
        if (step == n_steps) break;

        switch (integ) {
        case OracleIntegrator::ExponentialStep:
            psi = u_static * psi;
            break;
        case OracleIntegrator::Midpoint: {
            const Matrix u =
                hermitian_propagator(model.full_hamiltonian(t + 0.5 * config.dt), config.dt);
            psi = u * psi;
            break;
        }
        case OracleIntegrator::RK4: {
            const Matrix h_t = model.full_hamiltonian(t);
            const Matrix h_mid = time_dep ? model.full_hamiltonian(t + 0.5 * config.dt) : h_t;
            const Matrix h_end = time_dep ? model.full_hamiltonian(t + config.dt) : h_t;
            psi = rk4_state_step(h_t, h_mid, h_end, psi, config.dt);
            break;
        }
        }
    }
    return traj;
}

DensityTrajectory exact_propagate_density(const Matrix& rho0, const Model& model,
                                          const OracleConfig& config, double t_final) {
    const ProductSpace sp = model.space();
    if (rho0.rows() != sp.total_dim() || rho0.cols() != sp.total_dim()) {
        throw std::invalid_argument("exact_propagate_density: rho dimension mismatch");
    }
    if (!is_hermitian(rho0, 1e-10)) {
        throw std::invalid_argument("exact_propagate_density: rho must be Hermitian");
    }
    if (std::abs(rho0.trace().real() - 1.0) > 1e-10) {
        throw std::invalid_argument("exact_propagate_density: rho must have unit trace");
    }
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho0);
        if (es.info() != Eigen::Success) {
            throw std::runtime_error("exact_propagate_density: eigensolver failed");
        }
        if (es.eigenvalues().minCoeff() < -1e-10) {
            std::ostringstream msg;
            msg << "exact_propagate_density: rho not positive semidefinite (min eigenvalue "
                << es.eigenvalues().minCoeff() << ")";
            throw std::invalid_argument(msg.str());
        }
    }

    const int n_steps = step_count(t_final, config.dt);
    const bool time_dep = model.couplings.time_dependent();

    Matrix u_static;
    if (!time_dep) {
        u_static = tighten_unitary(hermitian_propagator(model.full_hamiltonian(0.0), config.dt));
    }

    DensityTrajectory traj;
    Matrix rho = rho0;
    for (int step = 0; step <= n_steps; ++step) {
        const double t = step * config.dt;
        if (step % config.sample_stride == 0 || step == n_steps) {
            traj.times.push_back(t);
            traj.rhos.push_back(rho);
        }
        if (step == n_steps) break;
        const Matrix u = time_dep
                             ? hermitian_propagator(
                                   model.full_hamiltonian(t + 0.5 * config.dt), config.dt)
                             : u_static;
        rho = u * rho * u.adjoint();
    }
    return traj;
}

double compare_reduced(const Matrix& oracle_rho_full, const CoherentProductState& ansatz_state,
                       const std::vector<std::size_t>& keep) {
    AssembledDensity ad = assemble_density(ansatz_state);
    const Index dl = ad.reduced_lattice.rows();

    std::vector<ProductSpace::Factor> f;
    f.push_back({"lattice", dl});
    for (std::size_t q = 0; q < ansatz_state.bath.n_modes(); ++q) {
        f.push_back({"mode" + std::to_string(q), ansatz_state.bath.modes[q].n_cut});
    }
    const ProductSpace sp{std::move(f)};
    if (oracle_rho_full.rows() != sp.total_dim()) {
        throw std::invalid_argument("compare_reduced: oracle density dimension mismatch");
    }

    const Matrix oracle_red = partial_trace(oracle_rho_full, sp, keep);
    const Matrix ansatz_red = partial_trace(ad.full, sp, keep);
    return trace_distance(oracle_red, ansatz_red);
}

} // namespace cps
