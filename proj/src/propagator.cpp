// propagator.cpp — coherent-product state propagation engine

#include "cps/propagator.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cps {

// --------------------------- Branch ------------------------------------------

double Branch::weight() const {
    return pure ? lattice_vector.squaredNorm() : lattice_op.squaredNorm();
}

Branch Branch::pure_state(std::string label, Vector v, Displacement beta,
                          std::vector<Complex> mu) {
    Branch b;
    b.label = std::move(label);
    b.pure = true;
    b.lattice_vector = std::move(v);
    b.beta = std::move(beta);
    b.mu = std::move(mu);
    return b;
}

Branch Branch::density_state(std::string label, Matrix op, Displacement beta,
                             std::vector<Complex> mu) {
    Branch b;
    b.label = std::move(label);
    b.pure = false;
    b.lattice_op = std::move(op);
    b.beta = std::move(beta);
    b.mu = std::move(mu);
    return b;
}

double CoherentProductState::total_weight() const {
    double w = 0.0;
    for (const auto& b : branches) w += b.weight();
    return w;
}

double CoherentProductState::max_pairwise_overlap() const {
    double m = 0.0;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        for (std::size_t j = i + 1; j < branches.size(); ++j) {
            Complex ov;
            if (branches[i].pure != branches[j].pure) {
                throw std::invalid_argument("CoherentProductState: mixed branch modes");
            }
            if (branches[i].pure) {
                ov = branches[i].lattice_vector.adjoint() * branches[j].lattice_vector;
            } else {
                ov = hs_inner(branches[i].lattice_op, branches[j].lattice_op);
            }
            m = std::max(m, std::abs(ov));
        }
    }
    return m;
}

// --------------------------- Scalars -----------------------------------------

Complex displacement_closed_form(Complex beta0, double omega, Complex mu, double t) {
    if (omega <= 0.0) {
        throw std::invalid_argument("displacement_closed_form: omega must be positive");
    }
    const Complex eq = mu / omega;
    return (beta0 + eq) * std::exp(-iunit * omega * t) - eq;
}

std::vector<Complex> integrate_displacement_rk4(Complex beta0, double omega,
                                                const std::function<Complex(double)>& mu_of_t,
                                                double dt, int n_steps) {
    if (dt <= 0.0 || n_steps < 1) {
        throw std::invalid_argument("integrate_displacement_rk4: need dt > 0 and n_steps >= 1");
    }
    auto deriv = [&](double t, Complex beta) { return -iunit * (omega * beta + mu_of_t(t)); };
    std::vector<Complex> out;
    out.reserve(n_steps + 1);
    Complex beta = beta0;
    out.push_back(beta);
    for (int k = 0; k < n_steps; ++k) {
        const double t = k * dt;
        const Complex k1 = deriv(t, beta);
        const Complex k2 = deriv(t + 0.5 * dt, beta + 0.5 * dt * k1);
        const Complex k3 = deriv(t + 0.5 * dt, beta + 0.5 * dt * k2);
        const Complex k4 = deriv(t + dt, beta + dt * k3);
        beta += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push_back(beta);
    }
    return out;
}

Complex energy_shift_complex(const std::vector<Complex>& mu, const Displacement& beta) {
    if (mu.size() != beta.size()) {
        throw std::invalid_argument("energy_shift: mu and beta must have equal length");
    }
    Complex sum = 0.0;
    for (std::size_t q = 0; q < mu.size(); ++q) {
        sum += mu[q] * std::conj(beta[q]) + std::conj(mu[q]) * beta[q];
    }
    return -0.5 * sum;
}

double energy_shift(const std::vector<Complex>& mu, const Displacement& beta) {
    return energy_shift_complex(mu, beta).real();
}

Matrix g_operator(const Model& model, std::size_t q, const Displacement& beta, double t) {
    Matrix g = model.couplings.w_at(q, t);
    if (!model.couplings.u.empty()) {
        for (std::size_t p = 0; p < model.couplings.u[q].size(); ++p) {
            const Matrix& uqp = model.couplings.u[q][p];
            if (uqp.size() != 0 && max_abs(uqp) > 0.0) g += beta[p] * uqp;
        }
    }
    return g;
}

// --------------------------- Residuals ---------------------------------------

namespace {

// Contributing lattice vectors of a branch: the vector itself (pure mode) or
// the left singular vectors with nonnegligible weight (density mode).
std::vector<Vector> contributing_vectors(const Branch& branch) {
    std::vector<Vector> vs;
    if (branch.pure) {
        const double n = branch.lattice_vector.norm();
        if (n < 1e-14) throw std::invalid_argument("branch: null lattice vector");
        vs.push_back(branch.lattice_vector / n);
        return vs;
    }
    Eigen::JacobiSVD<Matrix> svd(branch.lattice_op, Eigen::ComputeThinU);
    const double top = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    if (top < 1e-14) throw std::invalid_argument("branch: null lattice operator");
    for (Index k = 0; k < svd.singularValues().size(); ++k) {
        if (svd.singularValues()(k) > 1e-12 * top) {
            vs.push_back(svd.matrixU().col(k));
        }
    }
    return vs;
}

std::vector<Complex> rayleigh_mu(const Branch& branch, const Model& model, double t) {
    const auto vs = contributing_vectors(branch);
    std::vector<Complex> mu(model.couplings.n_modes());
    for (std::size_t q = 0; q < mu.size(); ++q) {
        const Matrix g = g_operator(model, q, branch.beta, t);
        mu[q] = (vs[0].adjoint() * g * vs[0])(0, 0);
    }
    return mu;
}

} // namespace

std::pair<double, double> self_consistency_residual(const Branch& branch, const Model& model,
                                                    const std::vector<Complex>& mu_candidate,
                                                    double t) {
    if (mu_candidate.size() != model.couplings.n_modes()) {
        throw std::invalid_argument("self_consistency_residual: mu size mismatch");
    }
    const auto vs = contributing_vectors(branch);
    const bool skip_adjoint = branch.pure && model.bath.temperature == 0.0;

    double rw = 0.0, rwd = 0.0;
    for (std::size_t q = 0; q < mu_candidate.size(); ++q) {
        const Matrix g = g_operator(model, q, branch.beta, t);
        const Matrix w = model.couplings.w_at(q, t);
        for (const auto& v : vs) {
            rw = std::max(rw, (g * v - mu_candidate[q] * v).norm());
            if (!skip_adjoint) {
                rwd = std::max(rwd,
                               (w.adjoint() * v - std::conj(mu_candidate[q]) * v).norm());
            }
        }
    }
    return {rw, skip_adjoint ? 0.0 : rwd};
}

// --------------------------- Propagation -------------------------------------

namespace {

// Evaluates the unperturbed lattice evolution directly in the eigenbasis of
// H_lat, so long runs carry no accumulated stepping error.
struct LatticeStepper {
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    bool pure;
    Vector coeffs;  // V† v(0)
    Matrix coeff_op; // V† a(0)

    LatticeStepper(const Matrix& h_lat, const Branch& b) : es(h_lat), pure(b.pure) {
        if (es.info() != Eigen::Success) {
            throw std::runtime_error("propagate_branch: lattice eigensolver failed");
        }
        if (pure) {
            coeffs = es.eigenvectors().adjoint() * b.lattice_vector;
        } else {
            coeff_op = es.eigenvectors().adjoint() * b.lattice_op;
        }
    }

    void set_lattice_at(Branch& b, double t) const {
        Vector phases(es.eigenvalues().size());
        for (Index k = 0; k < phases.size(); ++k) {
            phases(k) = std::exp(-iunit * es.eigenvalues()(k) * t);
        }
        if (pure) {
            b.lattice_vector = es.eigenvectors() * (phases.asDiagonal() * coeffs);
        } else {
            b.lattice_op = es.eigenvectors() * (phases.asDiagonal() * coeff_op);
        }
    }
};

// Exact integral of Omega over one closed-form displacement step, static mu:
//   ∫ -Re sum_q mu_q* beta_q(s) ds over s in [0, dt].
double theta_increment_static(const std::vector<Complex>& mu, const Displacement& beta,
                              const BathSpec& bath, double dt) {
    double inc = 0.0;
    for (std::size_t q = 0; q < mu.size(); ++q) {
        const double omega = bath.modes[q].omega;
        const Complex c = beta[q] + mu[q] / omega;
        const Complex window = (1.0 - std::exp(-iunit * omega * dt)) / (iunit * omega);
        inc -= std::real(std::conj(mu[q]) * c * window);
        inc += std::norm(mu[q]) / omega * dt;
    }
    return inc;
}

struct DerivEval {
    std::vector<Complex> dbeta;
    double dtheta;
};

DerivEval beta_theta_derivative(const std::vector<Complex>& mu, const Displacement& beta,
                                const BathSpec& bath) {
    DerivEval d;
    d.dbeta.resize(mu.size());
    for (std::size_t q = 0; q < mu.size(); ++q) {
        d.dbeta[q] = -iunit * (bath.modes[q].omega * beta[q] + mu[q]);
    }
    d.dtheta = energy_shift(mu, beta);
    return d;
}

void record_sample(BranchTrajectory& traj, const Branch& b, double initial_norm,
                   bool record_lattice) {
    traj.beta.push_back(b.beta.beta);
    traj.theta.push_back(b.theta);
    traj.omega_shift.push_back(b.omega_shift);
    traj.norm_drift.push_back(std::abs(std::sqrt(b.weight()) - initial_norm));
    if (record_lattice) {
        if (b.pure) {
            traj.lattice_vectors.push_back(b.lattice_vector);
        } else {
            traj.lattice_ops.push_back(b.lattice_op);
        }
    }
}

} // namespace

TrajectoryRecord propagate_branch(const Branch& branch, const Model& model, double dt,
                                  int n_steps, const PropagateOptions& options) {
    if (dt <= 0.0 || n_steps < 1) {
        throw std::invalid_argument("propagate_branch: need dt > 0 and n_steps >= 1");
    }
    if (model.couplings.has_bilinear() && model.bath.temperature > 0.0) {
        throw std::invalid_argument("propagate_branch: bilinear couplings require T = 0");
    }
    if (branch.beta.size() != model.bath.n_modes()) {
        throw std::invalid_argument("propagate_branch: displacement size mismatch");
    }

    Branch b = branch;
    if (b.mu.empty()) b.mu = rayleigh_mu(b, model, 0.0);

    // Start gate: the branch must sit in a certified simultaneous eigenspace.
    {
        auto [rw, rwd] = self_consistency_residual(b, model, b.mu, 0.0);
        if (!options.force_uncertified && std::max(rw, rwd) > options.certify_tol) {
            std::ostringstream msg;
            msg << "propagate_branch: initial state not certified (residuals " << rw << ", "
                << rwd << " exceed " << options.certify_tol
                << "); the ansatz is exact-or-refusing";
            throw std::invalid_argument(msg.str());
        }
    }

    const bool static_path = !model.couplings.time_dependent() &&
                             !model.couplings.has_bilinear() && !b.mu_of_t.has_value();
    LatticeStepper stepper(model.h_lat, b);
    const double initial_norm = std::sqrt(b.weight());

    auto mu_at = [&](double t, const Branch& br) -> std::vector<Complex> {
        if (br.mu_of_t) return (*br.mu_of_t)(t);
        if (static_path) return br.mu;
        return rayleigh_mu(br, model, t);
    };

    TrajectoryRecord record;
    BranchTrajectory traj;
    traj.label = b.label;

    b.omega_shift = energy_shift(mu_at(0.0, b), b.beta);

    for (int step = 0; step <= n_steps; ++step) {
        const double t = step * dt;

        if (step % options.sample_stride == 0 || step == n_steps) {
            record.times.push_back(t);
            record_sample(traj, b, initial_norm, options.record_lattice);
        }

        if (step % options.residual_stride == 0) {
            const auto mu_now = mu_at(t, b);
            auto [rw, rwd] = self_consistency_residual(b, model, mu_now, t);
            if (record.times.size() > traj.residual_w.size()) {
                traj.residual_w.push_back(rw);
                traj.residual_w_dag.push_back(rwd);
            }
            if (std::max(rw, rwd) > options.abort_tol) {
                record.abort.aborted = true;
                record.abort.step = step;
                record.abort.time = t;
                record.abort.residual_w = rw;
                record.abort.residual_w_dag = rwd;
                std::ostringstream msg;
                msg << "self-consistency residual " << std::max(rw, rwd) << " exceeded "
                    << options.abort_tol << " at step " << step
                    << ": the state left its decoherence-free subspace";
                record.abort.message = msg.str();
                break;
            }
        }

        if (step == n_steps) break;

        if (static_path) {
            b.theta += theta_increment_static(b.mu, b.beta, model.bath, dt);
            for (std::size_t q = 0; q < b.beta.size(); ++q) {
                b.beta.beta[q] = displacement_closed_form(b.beta[q], model.bath.modes[q].omega,
                                                          b.mu[q], dt);
            }
            stepper.set_lattice_at(b, t + dt);
            b.omega_shift = energy_shift(b.mu, b.beta);
        } else {
            // RK4 on (beta, Theta) with the lattice evaluated at the half and
            // full step for the Rayleigh eigenvalue samples.
            Branch mid = b;
            stepper.set_lattice_at(mid, t + 0.5 * dt);
            Branch end = b;
            stepper.set_lattice_at(end, t + dt);

            auto deriv = [&](double tau, const Displacement& beta,
                             const Branch& carrier) -> DerivEval {
                Branch probe = carrier;
                probe.beta = beta;
                return beta_theta_derivative(mu_at(tau, probe), beta, model.bath);
            };

            const std::size_t m = b.beta.size();
            auto axpy = [m](const Displacement& base, const std::vector<Complex>& k,
                            double factor) {
                Displacement out = base;
                for (std::size_t q = 0; q < m; ++q) out.beta[q] += factor * k[q];
                return out;
            };

            const DerivEval k1 = deriv(t, b.beta, b);
            const DerivEval k2 = deriv(t + 0.5 * dt, axpy(b.beta, k1.dbeta, 0.5 * dt), mid);
            const DerivEval k3 = deriv(t + 0.5 * dt, axpy(b.beta, k2.dbeta, 0.5 * dt), mid);
            const DerivEval k4 = deriv(t + dt, axpy(b.beta, k3.dbeta, dt), end);

            for (std::size_t q = 0; q < m; ++q) {
                b.beta.beta[q] += dt / 6.0 *
                                  (k1.dbeta[q] + 2.0 * k2.dbeta[q] + 2.0 * k3.dbeta[q] +
                                   k4.dbeta[q]);
            }
            b.theta += dt / 6.0 * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta);
            stepper.set_lattice_at(b, t + dt);
            const auto mu_next = mu_at(t + dt, b);
            b.mu = mu_next;
            b.omega_shift = energy_shift(mu_next, b.beta);
        }
    }

    record.branches.push_back(std::move(traj));
    return record;
}

TrajectoryRecord propagate_state(const CoherentProductState& state, const Model& model,
                                 double dt, int n_steps, const PropagateOptions& options) {
    if (state.branches.empty()) {
        throw std::invalid_argument("propagate_state: no branches");
    }
    TrajectoryRecord merged;
    for (std::size_t k = 0; k < state.branches.size(); ++k) {
        TrajectoryRecord r = propagate_branch(state.branches[k], model, dt, n_steps, options);
        if (k == 0) {
            merged.times = r.times;
        }
        if (r.aborted()) {
            merged.abort = r.abort;
            merged.abort.message = "branch '" + state.branches[k].label + "': " + r.abort.message;
        }
        if (r.times.size() < merged.times.size()) merged.times.resize(r.times.size());
        merged.branches.push_back(std::move(r.branches[0]));
    }
    for (auto& bt : merged.branches) {
        // On abort some branches carry more samples; align to the shortest.
        const std::size_t n = merged.times.size();
        bt.beta.resize(std::min(bt.beta.size(), n));
        bt.theta.resize(std::min(bt.theta.size(), n));
        bt.omega_shift.resize(std::min(bt.omega_shift.size(), n));
        if (!bt.lattice_vectors.empty()) bt.lattice_vectors.resize(std::min(bt.lattice_vectors.size(), n));
        if (!bt.lattice_ops.empty()) bt.lattice_ops.resize(std::min(bt.lattice_ops.size(), n));
    }

    // Reduced matrices and standard observables per sample.
    if (options.record_lattice) {
        const std::size_t n = merged.times.size();
        for (std::size_t s = 0; s < n; ++s) {
            CoherentProductState snap = state_at_sample(state, merged, s);
            AssembledDensity ad = assemble_density(snap);
            const Index dl = ad.reduced_lattice.rows();
            for (Index i = 0; i < dl; ++i) {
                merged.observables["pop_" + std::to_string(i)].push_back(
                    ad.reduced_lattice(i, i).real());
            }
            if (dl >= 2) {
                merged.observables["coh01_re"].push_back(ad.reduced_lattice(0, 1).real());
                merged.observables["coh01_im"].push_back(ad.reduced_lattice(0, 1).imag());
            }
            merged.reduced_lattice.push_back(std::move(ad.reduced_lattice));
            merged.reduced_phonon.push_back(std::move(ad.reduced_phonon));
        }
    }
    return merged;
}

CoherentProductState state_at_sample(const CoherentProductState& initial,
                                     const TrajectoryRecord& record, std::size_t sample) {
    if (sample >= record.times.size()) {
        throw std::out_of_range("state_at_sample: sample index out of range");
    }
    CoherentProductState out = initial;
    for (std::size_t k = 0; k < out.branches.size(); ++k) {
        const auto& traj = record.branches.at(k);
        Branch& b = out.branches[k];
        b.beta = Displacement(traj.beta.at(sample));
        b.theta = traj.theta.at(sample);
        b.omega_shift = traj.omega_shift.at(sample);
        if (b.pure) {
            b.lattice_vector = traj.lattice_vectors.at(sample);
        } else {
            b.lattice_op = traj.lattice_ops.at(sample);
        }
    }
    return out;
}

// --------------------------- Assembly ----------------------------------------

AssembledDensity assemble_density(const CoherentProductState& state) {
    if (state.branches.empty()) {
        throw std::invalid_argument("assemble_density: no branches");
    }
    const bool pure = state.branches.front().pure;
    Index dl = 0;
    for (const auto& b : state.branches) {
        if (b.pure != pure) throw std::invalid_argument("assemble_density: mixed branch modes");
        const Index d = b.pure ? b.lattice_vector.size() : b.lattice_op.rows();
        if (dl == 0) dl = d;
        if (d != dl) throw std::invalid_argument("assemble_density: lattice dim mismatch");
    }

    // Effective lattice operators with branch phases applied. Pure branches
    // use a common co-vector so that A_a' A_a† = |a'><a|.
    std::vector<Matrix> ops;
    std::vector<Matrix> gammas;
    for (const auto& b : state.branches) {
        const Complex phase = std::exp(iunit * b.theta);
        if (pure) {
            Matrix a = Matrix::Zero(dl, dl);
            a.col(0) = phase * b.lattice_vector;
            ops.push_back(std::move(a));
        } else {
            ops.push_back(phase * b.lattice_op);
        }
        gammas.push_back(displaced_thermal_gamma(b.beta, state.bath));
    }

    const Index dph = gammas.front().rows();
    AssembledDensity out;
    out.full = Matrix::Zero(dl * dph, dl * dph);
    out.reduced_lattice = Matrix::Zero(dl, dl);
    out.reduced_phonon = Matrix::Zero(dph, dph);

    for (std::size_t a = 0; a < ops.size(); ++a) {
        for (std::size_t ap = 0; ap < ops.size(); ++ap) {
            const Matrix lat = ops[ap] * ops[a].adjoint();
            out.full += kron(lat, gammas[ap] * gammas[a].adjoint());
            // Analytic bath overlap Tr[gamma_{a'} gamma_a†].
            const Complex phase = std::exp(iunit * (state.branches[ap].theta -
                                                     state.branches[a].theta));
            const Complex bath_factor =
                gaussian_overlap(state.branches[ap].beta, state.branches[a].beta, state.bath);
            Matrix lat_unphased;
            if (pure) {
                lat_unphased = Matrix::Zero(dl, dl);
                lat_unphased = state.branches[ap].lattice_vector *
                               state.branches[a].lattice_vector.adjoint();
            } else {
                lat_unphased = state.branches[ap].lattice_op * state.branches[a].lattice_op.adjoint();
            }
            out.reduced_lattice += phase * bath_factor * lat_unphased;
        }
        out.reduced_phonon += state.branches[a].weight() * (gammas[a] * gammas[a].adjoint());
    }
    return out;
}

} // namespace cps
