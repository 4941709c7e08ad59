#pragma once

#include "dmimo/matrix.hpp"

#include <string>
#include <vector>

namespace dmimo::linalg {

/// Singular value below rank_ratio * sigma_max counts as zero.
inline constexpr double kRankRatio = 1e-10;

/// Default residual tolerances, overridable from the CLI.
struct Tolerances {
    double orthonormality = 1e-9;
    double reconstruction = 1e-8; // relative Frobenius
    double above_diagonal = 1e-10;
    double diagonal_match = 1e-8;
};

// ---------------------------------------------------------------------------
// Factorizations
// ---------------------------------------------------------------------------

struct SvdResult {
    Matrix u;                  // m x r, orthonormal columns
    std::vector<double> sigma; // r = min(m, n), descending, >= 0
    Matrix v;                  // n x r, orthonormal columns
};

/// Thin SVD a = u * diag(sigma) * v^T via one-sided Jacobi (Hestenes)
/// rotations. High relative accuracy on the small matrices used here.
/// Throws ConvergenceFailure if the sweep cap is exceeded.
SvdResult svd(const Matrix& a);

/// QR of a tall-or-square matrix: x = q * r with q full (p x p) orthogonal
/// and r upper-trapezoidal (p x q). Building block for the triangular
/// routes below.
struct QrResult {
    Matrix q;
    Matrix r;
};
QrResult householder_qr(const Matrix& x);

/// Triangular-left factorization a = t * q of a matrix with no fewer
/// columns than rows: t is m x n generalized lower triangular ([L | 0],
/// zeros above the diagonal), q is n x n orthogonal, and diag(t) >= 0.
/// This is the RQ/LQ orientation the transmission schemes apply at the
/// transmitter side (identity factor on the receiver side).
struct LqResult {
    Matrix q; // n x n orthogonal
    Matrix t; // m x n, [L | 0]

    Matrix square_factor() const { return t.block(0, 0, t.rows(), t.rows()); }
    Matrix row_basis() const { return q.block(0, 0, t.rows(), q.cols()); }
};
LqResult qr_lower(const Matrix& a);

/// a = q * l for square a, with l lower triangular, diag(l) >= 0.
struct QlResult {
    Matrix q;
    Matrix l;
};
QlResult ql(const Matrix& a);

/// Extend a matrix with orthonormal columns (n x m, m <= n) to a full
/// n x n orthogonal matrix; the first m columns are kept bit-identical.
Matrix complete_orthonormal(const Matrix& thin);

/// Cholesky factor (lower) of a symmetric positive-definite matrix.
Matrix cholesky(const Matrix& s);

/// log2 det(s) for symmetric positive-definite s, via Cholesky.
double logdet2_spd(const Matrix& s);

// ---------------------------------------------------------------------------
// Proper channels
// ---------------------------------------------------------------------------

/// Channel matrix together with its average power budget (linear scale,
/// total across antennas). det(h h^T) = 1 up to the validation tolerance.
struct ProperChannel {
    Matrix h;
    double power = 0.0;
    double det_gram = 1.0;

    std::size_t n_r() const { return h.rows(); }
    std::size_t n_t() const { return h.cols(); }
};

struct PropernessReport {
    bool accepted = false;
    bool shape_ok = false;
    bool full_rank = false;
    bool det_ok = false;
    double det_gram = 0.0;
    std::size_t numerical_rank = 0;
    std::vector<std::string> failures;
};

/// Checks the three conditions (cols >= rows, numerical rank = rows,
/// |det(h h^T) - 1| <= tol) and reports every failed one.
PropernessReport validate_proper(const Matrix& h, double tol);

/// validate_proper that throws NotProper with the failure list.
ProperChannel make_proper(const Matrix& h, double power, double tol = 1e-6);

/// Rescales a full-row-rank channel to det(h h^T) = 1, absorbing the
/// determinant into the power budget: (h / a^(1/(2 m)), power * a^(1/m)).
/// A channel already within 1e-12 of proper is returned unchanged.
ProperChannel normalize_to_proper(const Matrix& h, double power);

/// det(h h^T) computed from singular values.
double det_gram(const Matrix& h);

} // namespace dmimo::linalg
