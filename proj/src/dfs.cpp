// dfs.cpp — simultaneous eigenspace detection and DFS certification

#include "cps/dfs.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cps {

namespace {

double coupling_scale(const CouplingSet& couplings) {
    double s = 1.0;
    for (std::size_t q = 0; q < couplings.n_modes(); ++q) {
        s = std::max(s, max_abs(couplings.w_static(q)));
    }
    return s;
}

// Split an orthonormal block by the eigenvalue clusters of the compression of
// a Hermitian operator onto it.
std::vector<Matrix> split_by_hermitian(const Matrix& block, const Matrix& herm, double gap,
                                       double scale) {
    const Matrix compressed = block.adjoint() * herm * block;
    Eigen::SelfAdjointEigenSolver<Matrix> es(compressed);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("common_eigenspaces: eigensolver failed");
    }
    const auto& vals = es.eigenvalues();
    const Matrix vecs = block * es.eigenvectors();

    std::vector<Matrix> out;
    Index start = 0;
    for (Index k = 1; k <= vals.size(); ++k) {
        if (k == vals.size() || vals(k) - vals(k - 1) > gap * scale) {
            out.push_back(vecs.middleCols(start, k - start));
            start = k;
        }
    }
    return out;
}

double max_col_residual(const Matrix& applied, const Matrix& basis, Complex scalar) {
    double r = 0.0;
    for (Index c = 0; c < basis.cols(); ++c) {
        r = std::max(r, (applied.col(c) - scalar * basis.col(c)).norm());
    }
    return r;
}

// Largest deviation of op from a scalar on the block; also returns the scalar.
std::pair<double, Complex> scalar_action(const Matrix& op, const Matrix& block) {
    const Complex mu = (block.col(0).adjoint() * op * block.col(0))(0, 0);
    return {max_col_residual(op * block, block, mu), mu};
}

Matrix orthonormal_complement(const Matrix& covered, Index dim, double rank_cut) {
    Matrix proj = Matrix::Identity(dim, dim);
    if (covered.cols() > 0) proj -= covered * covered.adjoint();
    Eigen::JacobiSVD<Matrix> svd(proj, Eigen::ComputeThinU);
    Index rank = 0;
    for (Index k = 0; k < svd.singularValues().size(); ++k) {
        if (svd.singularValues()(k) > rank_cut) ++rank;
    }
    return svd.matrixU().leftCols(rank);
}

} // namespace

EigenspaceScan common_eigenspaces(const CouplingSet& couplings, const DfsTolerances& tol) {
    if (couplings.n_modes() == 0) {
        throw std::invalid_argument("common_eigenspaces: empty coupling family");
    }
    const Index dim = couplings.w_static(0).rows();
    for (std::size_t q = 0; q < couplings.n_modes(); ++q) {
        if (couplings.w_static(q).rows() != dim || couplings.w_static(q).cols() != dim) {
            throw std::invalid_argument("common_eigenspaces: couplings must share one square dim");
        }
    }
    const double scale = coupling_scale(couplings);
    // Verification threshold for accepting a refined block as a true
    // simultaneous eigenspace (looser than the reporting tolerance).
    const double accept = 1e-8 * scale;

    // Stage 1: refine by the Hermitian pair of every mode. Exact for commuting
    // normal families; non-normal leftovers fail verification below.
    std::vector<Matrix> blocks{Matrix::Identity(dim, dim)};
    for (std::size_t q = 0; q < couplings.n_modes(); ++q) {
        const Matrix& wq = couplings.w_static(q);
        const Matrix parts[2] = {wq + wq.adjoint(), iunit * (wq - wq.adjoint())};
        for (const Matrix& herm : parts) {
            std::vector<Matrix> next;
            for (const auto& b : blocks) {
                auto pieces = split_by_hermitian(b, herm, tol.cluster_gap, scale);
                next.insert(next.end(), pieces.begin(), pieces.end());
            }
            blocks.swap(next);
        }
    }

    EigenspaceScan scan;
    std::vector<Matrix> rejected;
    for (const auto& b : blocks) {
        EigenspaceReport rep;
        rep.basis = b;
        bool ok = true;
        for (std::size_t q = 0; q < couplings.n_modes(); ++q) {
            auto [rw, mu] = scalar_action(couplings.w_static(q), b);
            auto [rwd, mu_dag] = scalar_action(couplings.w_static(q).adjoint(), b);
            rep.mu.push_back(mu);
            rep.residual_w = std::max(rep.residual_w, rw);
            rep.residual_w_dag = std::max(rep.residual_w_dag, rwd);
            ok = ok && rw < accept && rwd < accept &&
                 std::abs(mu_dag - std::conj(mu)) < accept;
        }
        if (ok) {
            scan.subspaces.push_back(std::move(rep));
        } else {
            rejected.push_back(b);
        }
    }

    // Stage 2: non-normal recovery. One-dimensional eigenvectors of the first
    // coupling that are simultaneously eigen for the whole family, outside the
    // stage-1 subspaces. Adjoint residuals are reported, not suppressed.
    Index covered_cols = 0;
    for (const auto& rep : scan.subspaces) covered_cols += rep.rank();
    Matrix covered(dim, covered_cols);
    {
        Index at = 0;
        for (const auto& rep : scan.subspaces) {
            covered.middleCols(at, rep.rank()) = rep.basis;
            at += rep.rank();
        }
    }

    if (covered_cols < dim) {
        Eigen::ComplexEigenSolver<Matrix> ces(couplings.w_static(0));
        if (ces.info() != Eigen::Success) {
            throw std::runtime_error("common_eigenspaces: non-normal eigensolver failed");
        }
        for (Index k = 0; k < dim; ++k) {
            Vector v = ces.eigenvectors().col(k);
            if (covered.cols() > 0) {
                // Skip vectors already represented in stage-1 subspaces.
                const double overlap = (covered.adjoint() * v).norm();
                if (overlap > 1.0 - 1e-10) continue;
            }
            v.normalize();
            bool simultaneous = true;
            EigenspaceReport rep;
            rep.basis = v;
            for (std::size_t q = 0; q < couplings.n_modes(); ++q) {
                const Complex mu = (v.adjoint() * couplings.w_static(q) * v)(0, 0);
                const double rw = (couplings.w_static(q) * v - mu * v).norm();
                const double rwd =
                    (couplings.w_static(q).adjoint() * v - std::conj(mu) * v).norm();
                rep.mu.push_back(mu);
                rep.residual_w = std::max(rep.residual_w, rw);
                rep.residual_w_dag = std::max(rep.residual_w_dag, rwd);
                simultaneous = simultaneous && rw < accept;
            }
            if (simultaneous) {
                scan.subspaces.push_back(std::move(rep));
                Matrix grown(dim, covered.cols() + 1);
                grown << covered, v;
                covered = grown;
            }
        }
    }

    scan.complement = orthonormal_complement(covered, dim, tol.rank_cut);
    return scan;
}

EigenspaceReport check_dfs(const EigenspaceReport& subspace, const Matrix& h_lat,
                           const CouplingSet& couplings, const DfsTolerances& tol) {
    EigenspaceReport rep = subspace;
    const Matrix& b = rep.basis;
    if (b.cols() == 0) throw std::invalid_argument("check_dfs: empty subspace");

    const double scale =
        std::max({1.0, coupling_scale(couplings), max_abs(h_lat)});
    const double threshold = tol.residual * scale;

    rep.diagnostics = {};
    rep.diagnostics.checked = true;
    rep.residual_w = 0.0;
    rep.residual_w_dag = 0.0;

    for (std::size_t q = 0; q < couplings.n_modes(); ++q) {
        const Matrix& wq = couplings.w_static(q);
        auto [rw, mu] = scalar_action(wq, b);
        rep.mu[q] = mu;
        rep.residual_w = std::max(rep.residual_w, rw);
        rep.residual_w_dag =
            std::max(rep.residual_w_dag, max_col_residual(wq.adjoint() * b, b, std::conj(mu)));

        const Matrix cww = commutator(wq, wq.adjoint()) * b;
        const Matrix chw = commutator(h_lat, wq) * b;
        for (Index c = 0; c < b.cols(); ++c) {
            rep.diagnostics.commutator_ww =
                std::max(rep.diagnostics.commutator_ww, cww.col(c).norm());
            rep.diagnostics.commutator_hw =
                std::max(rep.diagnostics.commutator_hw, chw.col(c).norm());
        }
    }

    rep.is_dfs = rep.residual_w < threshold && rep.diagnostics.commutator_ww < threshold &&
                 rep.diagnostics.commutator_hw < threshold;

    if (rep.is_dfs) {
        // Corollary of the criterion: the adjoint couplings and their
        // commutators with H_lat must vanish on S as well.
        for (std::size_t q = 0; q < couplings.n_modes(); ++q) {
            const Matrix chwd = commutator(h_lat, couplings.w_static(q).adjoint()) * b;
            for (Index c = 0; c < b.cols(); ++c) {
                rep.diagnostics.commutator_hwdag =
                    std::max(rep.diagnostics.commutator_hwdag, chwd.col(c).norm());
            }
        }
        rep.is_dfs = rep.diagnostics.commutator_hwdag < threshold &&
                     rep.residual_w_dag < threshold;
    }
    return rep;
}

std::vector<EigenspaceReport> dfs_scan(const Matrix& h_lat, const CouplingSet& couplings,
                                       const DfsTolerances& tol) {
    auto scan = common_eigenspaces(couplings, tol);
    std::vector<EigenspaceReport> out;
    out.reserve(scan.subspaces.size());
    for (const auto& s : scan.subspaces) {
        out.push_back(check_dfs(s, h_lat, couplings, tol));
    }
    return out;
}

double check_dfs_time_dependent(const Vector& state, const Matrix& h_lat,
                                const std::vector<Matrix>& w_at_t,
                                const std::vector<Matrix>& dw_dt,
                                const std::vector<Complex>& mu_rates) {
    if (w_at_t.size() != dw_dt.size() || w_at_t.size() != mu_rates.size()) {
        throw std::invalid_argument("check_dfs_time_dependent: per-mode inputs must align");
    }
    const double nrm = state.norm();
    if (nrm < 1e-12) throw std::invalid_argument("check_dfs_time_dependent: null state");
    const Vector v = state / nrm;

    double residual = 0.0;
    for (std::size_t q = 0; q < w_at_t.size(); ++q) {
        const Vector lhs = iunit * (commutator(h_lat, w_at_t[q]) * v) + dw_dt[q] * v;
        residual = std::max(residual, (lhs - mu_rates[q] * v).norm());
        const Vector lhs_dag =
            iunit * (commutator(h_lat, w_at_t[q].adjoint()) * v) + dw_dt[q].adjoint() * v;
        residual = std::max(residual, (lhs_dag - std::conj(mu_rates[q]) * v).norm());
    }
    return residual;
}

double lambda_constraint_residual(const Vector& state0, const Model& model, double horizon,
                                  int n_samples, bool pure_zero_temperature) {
    if (state0.norm() < 1e-12) {
        throw std::invalid_argument("lambda_constraint_residual: null initial state");
    }
    if (model.couplings.has_bilinear()) {
        throw std::logic_error("lambda_constraint_residual: bilinear couplings not supported; "
                               "the constraint operator here is built from the linear family");
    }
    if (horizon <= 0.0) {
        throw std::invalid_argument("lambda_constraint_residual: horizon must be positive");
    }
    int n = std::max(64, n_samples);
    if (n % 2 == 1) ++n; // composite Simpson needs an even interval count

    Eigen::SelfAdjointEigenSolver<Matrix> es(model.h_lat);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("lambda_constraint_residual: eigensolver failed");
    }
    const Vector v0 = (state0 / state0.norm()).eval();
    const Vector coeffs = es.eigenvectors().adjoint() * v0;

    auto integrand = [&](double t) {
        Vector phases(coeffs.size());
        for (Index k = 0; k < coeffs.size(); ++k) {
            phases(k) = std::exp(-iunit * es.eigenvalues()(k) * t) * coeffs(k);
        }
        const Vector v = es.eigenvectors() * phases;
        double f = 0.0;
        for (std::size_t q = 0; q < model.couplings.n_modes(); ++q) {
            const Matrix wq = model.couplings.w_at(q, t);
            const Complex mu = (v.adjoint() * wq * v)(0, 0);
            f += (wq * v - mu * v).squaredNorm();
            if (!pure_zero_temperature) {
                f += (wq.adjoint() * v - std::conj(mu) * v).squaredNorm();
            }
        }
        return f;
    };

    const double h = horizon / n;
    double sum = integrand(0.0) + integrand(horizon);
    for (int k = 1; k < n; ++k) {
        sum += (k % 2 == 1 ? 4.0 : 2.0) * integrand(k * h);
    }
    return sum * h / 3.0;
}

} // namespace cps
