// propagator.hpp — self-consistent propagation of coherent-product states:
// closed-form and RK4 displacement evolution, unperturbed-plus-shift lattice
// evolution, phase accumulation, and branch assembly into full and reduced
// density matrices.

#pragma once

#include "cps/bath.hpp"
#include "cps/models.hpp"
#include "cps/operators.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cps {

// --------------------------- Branch ------------------------------------------

// One coherent-product component: a lattice state (vector in pure mode,
// operator in density mode), its per-mode displacements and coupling
// eigenvalues, and the accumulated phase from the energy shift.
struct Branch {
    std::string label;

    // Exactly one of the two is used, selected by `pure`.
    bool pure = true;
    Vector lattice_vector;  // unnormalized; weight = <a|a>
    Matrix lattice_op;      // unnormalized; weight = (a|a)

    Displacement beta;
    std::vector<Complex> mu; // per-mode eigenvalue record
    std::optional<std::function<std::vector<Complex>(double)>> mu_of_t;

    double theta = 0.0;       // accumulated phase Theta = ∫ Omega dt
    double omega_shift = 0.0; // current Omega

    double weight() const;
    static Branch pure_state(std::string label, Vector v, Displacement beta,
                             std::vector<Complex> mu);
    static Branch density_state(std::string label, Matrix op, Displacement beta,
                                std::vector<Complex> mu);
};

struct CoherentProductState {
    std::vector<Branch> branches;
    BathSpec bath;

    double total_weight() const;
    // Largest |(a'|a)| over distinct branch pairs (should stay ~0).
    double max_pairwise_overlap() const;
};

// --------------------------- Trajectory --------------------------------------

struct AbortDiagnostic {
    bool aborted = false;
    int step = -1;
    double time = 0.0;
    double residual_w = 0.0;
    double residual_w_dag = 0.0;
    std::string message;
};

struct BranchTrajectory {
    std::string label;
    std::vector<std::vector<Complex>> beta; // [sample][mode]
    std::vector<double> theta;
    std::vector<double> omega_shift;
    std::vector<Vector> lattice_vectors; // pure mode, when recorded
    std::vector<Matrix> lattice_ops;     // density mode, when recorded
    std::vector<double> residual_w;
    std::vector<double> residual_w_dag;
    std::vector<double> norm_drift; // | ||state|| - ||state(0)|| |
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<BranchTrajectory> branches;
    std::vector<Matrix> reduced_lattice; // when requested
    std::vector<Matrix> reduced_phonon;  // when requested
    std::map<std::string, std::vector<double>> observables;
    AbortDiagnostic abort;

    bool aborted() const { return abort.aborted; }
    std::size_t n_samples() const { return times.size(); }
};

// --------------------------- Operations --------------------------------------

// beta(t) = (beta0 + mu/omega) e^{-i omega t} - mu/omega for time-independent
// mu; requires omega > 0.
Complex displacement_closed_form(Complex beta0, double omega, Complex mu, double t);

// Classical RK4 on i beta' = omega beta + mu(t) for one mode; returns the
// n_steps+1 samples including t = 0. Shares the derivative kernel with
// propagate_branch.
std::vector<Complex> integrate_displacement_rk4(Complex beta0, double omega,
                                                const std::function<Complex(double)>& mu_of_t,
                                                double dt, int n_steps);

// Omega = -(1/2) sum_q (mu_q beta_q* + mu_q* beta_q); real by construction.
double energy_shift(const std::vector<Complex>& mu, const Displacement& beta);
// The same sum kept complex (its imaginary part is a structural diagnostic).
Complex energy_shift_complex(const std::vector<Complex>& mu, const Displacement& beta);

// G_{q} = w_q + sum_{q'} beta_{q'} u_{qq'}; reduces to w_q without bilinears.
Matrix g_operator(const Model& model, std::size_t q, const Displacement& beta, double t = 0.0);

// (max_q ||G_q v - mu_q v||, max_q ||w_q† v - mu_q* v||) over the branch's
// contributing lattice vectors. The second component is reported as 0 in the
// pure zero-temperature mode, where only the forward eigenvalue constraint
// applies.
std::pair<double, double> self_consistency_residual(const Branch& branch, const Model& model,
                                                    const std::vector<Complex>& mu_candidate,
                                                    double t = 0.0);

struct PropagateOptions {
    int sample_stride = 1;
    bool record_lattice = true;
    bool force_uncertified = false; // skip the start certificate (negative controls)
    double certify_tol = 1e-8;      // start-gate residual threshold
    double abort_tol = 1e-6;        // hard mid-run abort threshold
    int residual_stride = 1;        // monitoring cadence in steps
};

// Advance one branch for n_steps of size dt. The lattice state advances by
// exp(-i H_lat dt) with the energy shift folded into theta; displacements use
// the closed form when mu is static, RK4 otherwise. A residual above
// abort_tol stops the run and flags the record (a correctness alarm: the
// state left its decoherence-free subspace).
TrajectoryRecord propagate_branch(const Branch& branch, const Model& model, double dt,
                                  int n_steps, const PropagateOptions& options = {});

// All branches plus reduced matrices and standard observables at each sample.
TrajectoryRecord propagate_state(const CoherentProductState& state, const Model& model,
                                 double dt, int n_steps, const PropagateOptions& options = {});

// Branch state at one recorded sample (for reassembly and cross-checks).
CoherentProductState state_at_sample(const CoherentProductState& initial,
                                     const TrajectoryRecord& record, std::size_t sample);

struct AssembledDensity {
    Matrix full;
    Matrix reduced_lattice;
    Matrix reduced_phonon;
};

// rho = sum_{a,a'} (A_{a'} A_a†) ⊗ (gamma_{a'} gamma_a†) on the truncated
// space, with branch phases applied; the reduced lattice matrix uses the
// analytic Gaussian overlap factors, the reduced phonon matrix the branch
// weights.
AssembledDensity assemble_density(const CoherentProductState& state);

} // namespace cps
