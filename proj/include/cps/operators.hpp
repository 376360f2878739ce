// operators.hpp — Dense complex operators on finite product Hilbert spaces:
// construction, embedding, Kronecker composition, partial trace, exponentials,
// distance measures.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace cps {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr Complex iunit{0.0, 1.0};

// --------------------------- Product space ----------------------------------

// Ordered tensor factorization of a finite Hilbert space. The first factor is
// the slow index (matches kron's convention below).
struct ProductSpace {
    struct Factor {
        std::string label;
        Index dim = 0;
    };

    std::vector<Factor> factors;

    ProductSpace() = default;
    explicit ProductSpace(std::vector<Factor> f);

    Index total_dim() const;
    std::size_t size() const { return factors.size(); }
    Index dim(std::size_t k) const;

    // Row-major composite index with factor 0 slowest.
    Index flatten(const std::vector<Index>& idx) const;
    std::vector<Index> unflatten(Index flat) const;
};

// --------------------------- Basic algebra ----------------------------------

// Tensor product, first argument slow: (a⊗b)[i*db+k, j*db+l] = a(i,j) b(k,l).
Matrix kron(const Matrix& a, const Matrix& b);
Vector kron(const Vector& a, const Vector& b);

// op acting on factor `factor_index`, identity elsewhere.
Matrix embed(const Matrix& op, std::size_t factor_index, const ProductSpace& space);

// ab - ba; dimensions must agree.
Matrix commutator(const Matrix& a, const Matrix& b);

// Scaling-and-squaring Padé exponential; throws with norm diagnostics if the
// result is not finite.
Matrix matrix_exponential(const Matrix& a);

// exp(-i H t) for Hermitian H, via eigendecomposition (exact up to solver
// accuracy; preferred for repeated propagator steps).
Matrix hermitian_propagator(const Matrix& h, double t);

// One Newton polar step u <- 1.5 u - 0.5 u u† u. Pulls a near-unitary matrix
// onto the unitary manifold so repeated stepping does not accumulate a
// systematic norm drift.
Matrix tighten_unitary(const Matrix& u);

// Trace over all factors not in `keep` (indices into space.factors, strictly
// increasing order in the result).
Matrix partial_trace(const Matrix& rho, const ProductSpace& space,
                     const std::vector<std::size_t>& keep);

// (1/2)||a-b||_1 via eigenvalues of the Hermitian difference. Both inputs must
// be Hermitian.
double trace_distance(const Matrix& a, const Matrix& b);

// Truncated bosonic mode with n_cut Fock levels |0..n_cut-1>. Returns
// (annihilator, creator); annihilator has sqrt(n) on the first superdiagonal.
std::pair<Matrix, Matrix> boson_ladder(Index n_cut);

// --------------------------- Small helpers ----------------------------------

inline Matrix identity(Index n) { return Matrix::Identity(n, n); }

inline double max_abs(const Matrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& a, double tol = 1e-12) {
    return a.rows() == a.cols() && max_abs(a - a.adjoint()) <= tol;
}

inline bool is_unitary(const Matrix& a, double tol = 1e-12) {
    return a.rows() == a.cols() &&
           max_abs(a.adjoint() * a - Matrix::Identity(a.rows(), a.cols())) <= tol;
}

// Basis column |i> in dimension n.
Vector basis_vector(Index n, Index i);

// Frobenius-normalized Hilbert-Schmidt inner product (a|b) = Tr(a† b).
inline Complex hs_inner(const Matrix& a, const Matrix& b) {
    return (a.adjoint() * b).trace();
}

} // namespace cps
