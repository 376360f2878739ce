// dfs.hpp — detection of simultaneous eigenspaces of a coupling family and
// certification of decoherence-free subspaces via the kernel-of-commutators
// and time-dependent criteria.

#pragma once

#include "cps/models.hpp"
#include "cps/operators.hpp"

#include <vector>

namespace cps {

struct DfsTolerances {
    double cluster_gap = 1e-9;   // relative eigenvalue clustering gap
    double rank_cut = 1e-10;     // singular-value cut for subspace intersection
    double residual = 1e-10;     // criterion residual threshold
};

// One candidate subspace: orthonormal basis columns, per-mode eigenvalue
// tuple, and the residuals of the eigenvalue and DFS criteria.
struct EigenspaceReport {
    Matrix basis;                 // dim x rank, orthonormal columns
    std::vector<Complex> mu;      // per-mode eigenvalue
    double residual_w = 0.0;      // max_q, v ||w_q v - mu_q v||
    double residual_w_dag = 0.0;  // max_q, v ||w_q† v - mu_q* v||
    bool is_dfs = false;

    struct Diagnostics {
        double commutator_ww = 0.0;    // max ||[w_q, w_q†] v||
        double commutator_hw = 0.0;    // max ||[H_lat, w_q] v||
        double commutator_hwdag = 0.0; // max ||[H_lat, w_q†] v||
        bool checked = false;
    } diagnostics;

    Index rank() const { return basis.cols(); }
};

struct EigenspaceScan {
    std::vector<EigenspaceReport> subspaces;
    Matrix complement; // orthonormal basis of vectors in no simultaneous eigenspace
};

// Partition (a subspace of) the lattice space into maximal simultaneous
// eigenspaces of all w_q. Normal commuting families resolve through the
// Hermitian pair (w + w†, i(w - w†)); one-dimensional eigenvectors of
// non-normal couplings are recovered separately and carry explicit adjoint
// residuals.
EigenspaceScan common_eigenspaces(const CouplingSet& couplings,
                                  const DfsTolerances& tol = {});

// Decide the decoherence-free property of one candidate subspace:
// [w_q, w_q†] v = 0 and [H_lat, w_q] v = 0 for every q and basis vector; on
// success [H_lat, w_q†] v = 0 is asserted as the criterion's corollary.
EigenspaceReport check_dfs(const EigenspaceReport& subspace, const Matrix& h_lat,
                           const CouplingSet& couplings, const DfsTolerances& tol = {});

// Convenience: scan + classify. Returns every candidate with is_dfs decided.
std::vector<EigenspaceReport> dfs_scan(const Matrix& h_lat, const CouplingSet& couplings,
                                       const DfsTolerances& tol = {});

// Time-dependent criterion at one instant:
//   (i [H_lat, w_q] + dw_q/dt) v = (dmu_q/dt) v  and the adjoint analogue.
// Returns the maximal residual norm over modes.
double check_dfs_time_dependent(const Vector& state, const Matrix& h_lat,
                                const std::vector<Matrix>& w_at_t,
                                const std::vector<Matrix>& dw_dt,
                                const std::vector<Complex>& mu_rates);

// Quadrature approximation of <state0| Lambda |state0> over [0, horizon] with
// the unperturbed propagator of the model's lattice Hamiltonian:
//   integrand(t) = sum_q ||(w_q(t) - mu_q) v(t)||^2 [+ adjoint term unless the
//   run is pure zero-temperature], v(t) = exp(-i H_lat t) state0,
// mu_q taken as the instantaneous expectation <v|w_q(t)|v>. Composite Simpson
// with n_samples >= 64 intervals. Zero (below tolerance) certifies an
// admissible initial state over the horizon.
double lambda_constraint_residual(const Vector& state0, const Model& model, double horizon,
                                  int n_samples = 64, bool pure_zero_temperature = false);

} // namespace cps
