// operators.cpp — product-space bookkeeping and dense operator primitives

#include "cps/operators.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cps {

// --------------------------- ProductSpace -----------------------------------

ProductSpace::ProductSpace(std::vector<Factor> f) : factors(std::move(f)) {
    std::set<std::string> labels;
    for (const auto& fac : factors) {
        if (fac.dim <= 0) {
            throw std::invalid_argument("ProductSpace: factor dimension must be positive");
        }
        if (!labels.insert(fac.label).second) {
            throw std::invalid_argument("ProductSpace: duplicate factor label '" + fac.label + "'");
        }
    }
}

Index ProductSpace::total_dim() const {
    Index d = 1;
    for (const auto& f : factors) d *= f.dim;
    return d;
}

Index ProductSpace::dim(std::size_t k) const {
    if (k >= factors.size()) throw std::out_of_range("ProductSpace::dim: factor index out of range");
    return factors[k].dim;
}

Index ProductSpace::flatten(const std::vector<Index>& idx) const {
    if (idx.size() != factors.size()) {
        throw std::invalid_argument("ProductSpace::flatten: index count mismatch");
    }
    Index flat = 0;
    for (std::size_t k = 0; k < factors.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= factors[k].dim) {
            throw std::out_of_range("ProductSpace::flatten: index out of range");
        }
        flat = flat * factors[k].dim + idx[k];
    }
    return flat;
}

std::vector<Index> ProductSpace::unflatten(Index flat) const {
    std::vector<Index> idx(factors.size(), 0);
    for (std::size_t k = factors.size(); k-- > 0;) {
        idx[k] = flat % factors[k].dim;
        flat /= factors[k].dim;
    }
    return idx;
}

// --------------------------- Algebra -----------------------------------------

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    out = Eigen::kroneckerProduct(a, b);
    return out;
}

Vector kron(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a(i) * b;
    }
    return out;
}

Matrix embed(const Matrix& op, std::size_t factor_index, const ProductSpace& space) {
    if (factor_index >= space.size()) {
        throw std::out_of_range("embed: factor index out of range");
    }
    if (op.rows() != op.cols() || op.rows() != space.dim(factor_index)) {
        std::ostringstream msg;
        msg << "embed: operator is " << op.rows() << "x" << op.cols()
            << " but factor " << factor_index << " has dimension " << space.dim(factor_index);
        throw std::invalid_argument(msg.str());
    }
    Index left = 1, right = 1;
    for (std::size_t k = 0; k < factor_index; ++k) left *= space.dim(k);
    for (std::size_t k = factor_index + 1; k < space.size(); ++k) right *= space.dim(k);
    return kron(kron(identity(left), op), identity(right));
}

Matrix commutator(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("commutator: dimension mismatch");
    }
    return a * b - b * a;
}

Matrix matrix_exponential(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("matrix_exponential: matrix must be square");
    }
    Matrix e = a.exp();
    if (!e.allFinite()) {
        std::ostringstream msg;
        msg << "matrix_exponential: non-finite result (input max |entry| = " << max_abs(a)
            << ", Frobenius norm = " << a.norm() << ")";
        throw std::runtime_error(msg.str());
    }
    return e;
}

Matrix hermitian_propagator(const Matrix& h, double t) {
    if (!is_hermitian(h, 1e-10 * std::max(1.0, max_abs(h)))) {
        throw std::invalid_argument("hermitian_propagator: generator is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("hermitian_propagator: eigensolver failed");
    }
    const auto& w = es.eigenvalues();
    Vector phases(w.size());
    for (Index k = 0; k < w.size(); ++k) phases(k) = std::exp(-iunit * w(k) * t);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix tighten_unitary(const Matrix& u) {
    return 1.5 * u - 0.5 * (u * u.adjoint() * u);
}

Matrix partial_trace(const Matrix& rho, const ProductSpace& space,
                     const std::vector<std::size_t>& keep) {
    const Index d = space.total_dim();
    if (rho.rows() != d || rho.cols() != d) {
        throw std::invalid_argument("partial_trace: rho dimension does not match space");
    }
    std::set<std::size_t> keep_set;
    for (auto k : keep) {
        if (k >= space.size()) throw std::out_of_range("partial_trace: bad factor index");
        if (!keep_set.insert(k).second) {
            throw std::invalid_argument("partial_trace: repeated factor index");
        }
    }

    std::vector<std::size_t> kept(keep_set.begin(), keep_set.end());
    std::vector<std::size_t> traced;
    for (std::size_t k = 0; k < space.size(); ++k) {
        if (!keep_set.count(k)) traced.push_back(k);
    }

    Index dk = 1, dt = 1;
    for (auto k : kept) dk *= space.dim(k);
    for (auto k : traced) dt *= space.dim(k);

    // Composite index helpers over the kept / traced subsets.
    auto compose = [&](Index ik, Index it) {
        std::vector<Index> idx(space.size(), 0);
        for (std::size_t p = kept.size(); p-- > 0;) {
            idx[kept[p]] = ik % space.dim(kept[p]);
            ik /= space.dim(kept[p]);
        }
        for (std::size_t p = traced.size(); p-- > 0;) {
            idx[traced[p]] = it % space.dim(traced[p]);
            it /= space.dim(traced[p]);
        }
        return space.flatten(idx);
    };

    Matrix out = Matrix::Zero(dk, dk);
    for (Index i = 0; i < dk; ++i) {
        for (Index j = 0; j < dk; ++j) {
            Complex sum = 0.0;
            for (Index t = 0; t < dt; ++t) {
                sum += rho(compose(i, t), compose(j, t));
            }
            out(i, j) = sum;
        }
    }
    return out;
}

double trace_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("trace_distance: dimension mismatch");
    }
    const double scale = std::max({1.0, max_abs(a), max_abs(b)});
    if (!is_hermitian(a, 1e-10 * scale) || !is_hermitian(b, 1e-10 * scale)) {
        throw std::invalid_argument("trace_distance: inputs must be Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(a - b);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("trace_distance: eigensolver failed");
    }
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

std::pair<Matrix, Matrix> boson_ladder(Index n_cut) {
    if (n_cut < 2) throw std::invalid_argument("boson_ladder: n_cut must be at least 2");
    Matrix b = Matrix::Zero(n_cut, n_cut);
    for (Index n = 1; n < n_cut; ++n) {
        b(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return {b, b.adjoint()};
}

Vector basis_vector(Index n, Index i) {
    if (i < 0 || i >= n) throw std::out_of_range("basis_vector: index out of range");
    Vector v = Vector::Zero(n);
    v(i) = 1.0;
    return v;
}

} // namespace cps
