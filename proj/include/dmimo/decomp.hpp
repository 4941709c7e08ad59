#pragma once

#include "dmimo/linalg.hpp"
#include "dmimo/matrix.hpp"

#include <span>
#include <string>
#include <vector>

namespace dmimo::decomp {

// ---------------------------------------------------------------------------
// Single-matrix triangularization
// ---------------------------------------------------------------------------

/// a = u * t * v^T with u (m x m), v (n x n) orthogonal and t (m x n)
/// generalized lower triangular ([L | 0]).
struct GtdResult {
    Matrix u;
    Matrix t;
    Matrix v;
    std::vector<double> diag;
};

/// Geometric mean decomposition: every diagonal entry of t equals the
/// geometric mean of the singular values (1 for a proper matrix).
///
/// Construction: SVD, then a sequence of paired rotations, each combining
/// one diagonal entry above the geometric mean with one below (largest-above
/// with smallest-below), pinning the target value one position at a time.
GtdResult gmd(const Matrix& a, double proper_tol = 1e-6);

/// Existence test for a generalized triangular decomposition with the
/// prescribed diagonal: true iff the prescribed values (sorted descending
/// by magnitude) are multiplicatively majorized by the singular values.
bool gtd_feasible(std::span<const double> sigma, std::span<const double> prescribed);

// ---------------------------------------------------------------------------
// Joint triangularization of two matrices
// ---------------------------------------------------------------------------

enum class Orientation { SharedRight, SharedLeft };

/// Joint equi-diagonal triangularization of two matrices.
///
/// SharedLeft (the multiple-access scheme form): h_k = shared * t_k * v_k^T,
/// with shared (n_r x n_r) applied at the receiver, per-matrix v_k
/// (n_t,k x n_t,k) applied at each transmitter, t_k (n_r x n_t,k) = [L | 0].
///
/// SharedRight: a_k = u_k * t_k * shared^T for square or tall inputs
/// (rows >= cols). For wide inputs the factorization applies to the
/// transposes — the only orientation in which a common right factor exists —
/// and the verifier reconstructs a_k^T = u_k * t_k * shared^T (factor shapes
/// disambiguate).
///
/// Common diagonal entries are positive and equal across matrices.
struct JointTriangularization {
    Orientation orientation = Orientation::SharedLeft;
    Matrix shared;
    struct Factor {
        Matrix u; // the per-matrix orthogonal factor (v_k for SharedLeft)
        Matrix t;
    };
    std::vector<Factor> per_matrix;
    std::vector<double> diag;
};

JointTriangularization jet_shared_right(const Matrix& a1, const Matrix& a2,
                                        double proper_tol = 1e-6);
JointTriangularization jet_shared_left(const Matrix& h1, const Matrix& h2,
                                       double proper_tol = 1e-6);

/// Residual report for a joint triangularization against the original
/// matrices. Accepts externally supplied factor sets as well, so
/// constructions produced elsewhere (e.g. block-extension factors for
/// K >= 3) can be validated under any row-selection convention.
struct VerifyReport {
    bool pass = false;
    std::vector<double> reconstruction; // relative Frobenius, per matrix
    double max_above_diagonal = 0.0;
    double max_diag_disparity = 0.0;
    double max_orthonormality = 0.0;
    std::string detail;
};

VerifyReport verify_joint_triangularization(const JointTriangularization& jt,
                                            const std::vector<Matrix>& originals,
                                            const linalg::Tolerances& tol = {});

// ---------------------------------------------------------------------------
// Time extension for K >= 3 users
// ---------------------------------------------------------------------------

/// Block-diagonal lifting I_N (x) H_k of every channel, with the number of
/// rows for which joint triangularization is guaranteed after truncation:
/// truncated_rows = N - N_r^(K-2) + 1.
struct TimeExtension {
    std::size_t n_blocks = 0;     // N
    std::size_t base_rows = 0;    // N_r
    std::size_t users = 0;        // K
    std::vector<Matrix> extended; // I_N (x) H_k
    std::size_t truncated_rows = 0;
};

TimeExtension build_time_extension(const std::vector<Matrix>& channels, std::size_t n_blocks);

/// truncated_rows / N; tends to 1 as N grows.
double extension_efficiency(std::size_t n_r, std::size_t k_users, std::size_t n_blocks);

/// N_r^(K-2); the minimum admissible N. Throws TooFewBlocks on overflow.
std::size_t min_blocks(std::size_t n_r, std::size_t k_users);

} // namespace dmimo::decomp
