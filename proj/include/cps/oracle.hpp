// oracle.hpp — brute-force ground truth: exact unitary propagation of the
// full lattice ⊗ truncated-Fock system for pure states and density matrices,
// static or time-dependent Hamiltonians.

#pragma once

#include "cps/models.hpp"
#include "cps/propagator.hpp"

#include <vector>

namespace cps {

enum class OracleIntegrator {
    ExponentialStep, // repeated exact exponential of a static Hamiltonian
    Midpoint,        // midpoint-sampled exponential per step (time-dependent H)
    RK4              // classical RK4 on the Schroedinger/von Neumann equation
};

struct OracleConfig {
    double dt = 1e-3;
    int sample_stride = 1;
    OracleIntegrator integrator = OracleIntegrator::ExponentialStep;
    double norm_abort = 1e-8;     // norm drift that aborts a pure run
    double comparison_tol = 1e-8; // default tolerance for consumers
};

struct PureTrajectory {
    std::vector<double> times;
    std::vector<Vector> states;
};

struct DensityTrajectory {
    std::vector<double> times;
    std::vector<Matrix> rhos;
};

// Unitary propagation of a normalized pure state on the full product space.
// Norm is monitored and a drift beyond norm_abort aborts with a diagnostic.
PureTrajectory exact_propagate_pure(const Vector& psi0, const Model& model,
                                    const OracleConfig& config, double t_final);

// rho(t) = U rho0 U†; the input must be Hermitian, positive semidefinite to
// 1e-10 and unit trace.
DensityTrajectory exact_propagate_density(const Matrix& rho0, const Model& model,
                                          const OracleConfig& config, double t_final);

// Trace distance between the oracle's reduced matrix over the kept factors
// and the same reduction of the assembled coherent-product state.
double compare_reduced(const Matrix& oracle_rho_full, const CoherentProductState& ansatz_state,
                       const std::vector<std::size_t>& keep);

} // namespace cps
