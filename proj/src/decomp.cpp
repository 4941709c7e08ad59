#include "dmimo/decomp.hpp"

#include "dmimo/errors.hpp"
#include "dmimo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dmimo::decomp {

namespace {

using linalg::LqResult;
using linalg::QrResult;
using linalg::SvdResult;

void rotate_cols(Matrix& m, std::size_t j0, std::size_t j1, double c, double s) {
    // col_j0' = c col_j0 + s col_j1, col_j1' = -s col_j0 + c col_j1
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double a = m(i, j0);
        const double b = m(i, j1);
        m(i, j0) = c * a + s * b;
        m(i, j1) = c * b - s * a;
    }
}

void swap_cols(Matrix& m, std::size_t j0, std::size_t j1) {
    for (std::size_t i = 0; i < m.rows(); ++i) std::swap(m(i, j0), m(i, j1));
}

void swap_rows(Matrix& m, std::size_t i0, std::size_t i1) {
    for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(i0, j), m(i1, j));
}

struct GmdCore {
    Matrix t;  // n x n lower triangular, diagonal all equal to the geometric mean
    Matrix gu; // n x n
    Matrix gv; // n x n, diag(sigma) = gu * t * gv^T
};

// Rotation stage of the geometric mean decomposition, applied to the
// diagonal of singular values. Each step pins the target value at one
// diagonal position by combining the largest entry above the geometric
// mean with the smallest entry below it; fill lands strictly below the
// diagonal, so lower-triangularity is preserved throughout.
GmdCore gmd_rotations(std::span<const double> sigma) {
    const std::size_t n = sigma.size();
    GmdCore core{Matrix::diagonal(sigma), Matrix::identity(n), Matrix::identity(n)};
    if (n < 2) return core;

    double log_mean = 0.0;
    for (double s : sigma) log_mean += std::log(s);
    const double p = std::exp(log_mean / static_cast<double>(n));

    Matrix& t = core.t;
    auto swap_sym = [&](std::size_t i, std::size_t j) {
        if (i == j) return;
        swap_rows(t, i, j);
        swap_cols(t, i, j);
        swap_cols(core.gu, i, j);
        swap_cols(core.gv, i, j);
    };

    for (std::size_t k = 0; k + 1 < n; ++k) {
        std::size_t hi = k, lo = k;
        for (std::size_t i = k; i < n; ++i) {
            if (t(i, i) > t(hi, hi)) hi = i;
            if (t(i, i) < t(lo, lo)) lo = i;
        }
        if (t(hi, hi) - p <= 1e-12 * p && p - t(lo, lo) <= 1e-12 * p) continue;

        swap_sym(k, hi);
        if (lo == k) lo = hi;
        swap_sym(k + 1, lo);

        const double x = t(k, k);
        const double y = t(k + 1, k + 1);
        if (std::abs(x - y) <= 1e-13 * std::max(std::abs(x), std::abs(y))) continue;

        // Right rotation moving the target p onto position k, then a left
        // rotation restoring triangularity: c^2 = x^2 (y^2-p^2) / (p^2 (y^2-x^2)).
        const double num = x * x * (y - p) * (y + p);
        const double den = p * p * (y - x) * (y + x);
        const double c2 = std::clamp(num / den, 0.0, 1.0);
        const double c = std::sqrt(c2);
        const double s = std::sqrt(1.0 - c2);
        const double rhat = std::hypot(s * x, c * y);
        const double ch = c * y / rhat;
        const double sh = s * x / rhat;

        rotate_cols(t, k, k + 1, c, s);
        kernels::active().rot(t.row_ptr(k), t.row_ptr(k + 1), n, ch, sh);
        rotate_cols(core.gu, k, k + 1, ch, sh);
        rotate_cols(core.gv, k, k + 1, c, s);
        t(k, k + 1) = 0.0; // designed zero
    }
    // Everything above the diagonal is rounding residue of designed zeros.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) t(i, j) = 0.0;
    return core;
}

void require_proper(const Matrix& a, double tol, const char* who) {
    linalg::PropernessReport rep = linalg::validate_proper(a, tol);
    if (!rep.accepted) {
        std::string what = std::string(who) + " requires a proper matrix:";
        for (const auto& f : rep.failures) what += " [" + f + "]";
        raise(ErrorKind::NotProper, what);
    }
}

// Rows of x solved against an upper-triangular r from the right: x r = s.
Matrix solve_upper_right(const Matrix& s, const Matrix& r) {
    const std::size_t n = r.rows();
    Matrix x(s.rows(), n);
    for (std::size_t row = 0; row < s.rows(); ++row) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = s(row, j);
            for (std::size_t i = 0; i < j; ++i) acc -= x(row, i) * r(i, j);
            x(row, j) = acc / r(j, j);
        }
    }
    return x;
}

Matrix blkdiag_identity(const Matrix& w, std::size_t extra) {
    Matrix b(w.rows() + extra, w.cols() + extra);
    b.set_block(0, 0, w);
    for (std::size_t i = 0; i < extra; ++i) b(w.rows() + i, w.cols() + i) = 1.0;
    return b;
}

struct SquareJet {
    Matrix shared; // the common factor
    Matrix w1, l1; // S1 = w1 l1 shared^T
    Matrix w2, l2;
    std::vector<double> diag;
};

// Shared-right JET of two square invertible matrices with |det| = 1:
// GMD of s1 s2^{-1} has an all-ones diagonal, and triangularizing s2 with
// the GMD's right factor yields equal diagonals for both.
SquareJet jet_square_shared_right(const Matrix& s1, const Matrix& s2) {
    const std::size_t n = s1.rows();

    QrResult qr2 = linalg::householder_qr(s2);
    Matrix c = solve_upper_right(s1, qr2.r) * qr2.q.transposed();

    GtdResult g = gmd(c, 1e-3); // ratio matrix is proper up to rounding
    LqResult lq = linalg::qr_lower(g.v.transposed() * s2);

    SquareJet out;
    out.shared = lq.q.transposed(); // V
    out.w2 = g.v;
    out.l2 = lq.square_factor();
    out.w1 = g.u;
    out.l1 = g.t.block(0, 0, n, n) * out.l2;

    // diag(l2) >= 0 from qr_lower's convention and diag(l1) = gmd_diag * diag(l2)
    // with a positive gmd diagonal, so the common diagonal is positive.
    out.diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.diag[i] = out.l2(i, i);
    return out;
}

Matrix reversal_dual(const Matrix& m) { return m.transposed().reversed_both(); }

struct SquareJetLeft {
    Matrix shared; // U
    Matrix t1, w1; // S1 = U t1 w1^T
    Matrix t2, w2;
    std::vector<double> diag;
};

// Shared-left form for square matrices, derived from the shared-right form
// on transposed, row-and-column-reversed inputs (keeps lower-triangularity).
SquareJetLeft jet_square_shared_left(const Matrix& s1, const Matrix& s2) {
    SquareJet jr = jet_square_shared_right(reversal_dual(s1), reversal_dual(s2));
    SquareJetLeft out;
    out.shared = jr.shared.reversed_both();
    out.t1 = reversal_dual(jr.l1);
    out.t2 = reversal_dual(jr.l2);
    out.w1 = jr.w1.reversed_both();
    out.w2 = jr.w2.reversed_both();
    const std::size_t n = jr.diag.size();
    out.diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.diag[i] = jr.diag[n - 1 - i];
    return out;
}

void require_unit_gram(const Matrix& a, double tol, const char* who) {
    if (!a.is_finite()) raise(ErrorKind::NotProper, std::string(who) + ": non-finite entries");
    const double dg = linalg::det_gram(a);
    if (std::abs(dg - 1.0) > tol) {
        std::ostringstream os;
        os << who << ": gram determinant " << dg << " not within " << tol << " of 1";
        raise(ErrorKind::NotProper, os.str());
    }
    linalg::SvdResult d = linalg::svd(a);
    if (d.sigma.back() <= linalg::kRankRatio * d.sigma.front())
        raise(ErrorKind::NotProper, std::string(who) + ": rank deficient");
}

} // namespace

GtdResult gmd(const Matrix& a, double proper_tol) {
    require_proper(a, proper_tol, "gmd");
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();

    SvdResult s = linalg::svd(a);
    GmdCore core = gmd_rotations(s.sigma);

    GtdResult out;
    out.u = s.u * core.gu;
    Matrix v_thin = s.v * core.gv;
    out.v = (m == n) ? std::move(v_thin) : linalg::complete_orthonormal(v_thin);
    out.t = Matrix(m, n);
    out.t.set_block(0, 0, core.t);
    out.diag = out.t.diagonal_vector();
    return out;
}

bool gtd_feasible(std::span<const double> sigma, std::span<const double> prescribed) {
    if (sigma.size() != prescribed.size())
        raise(ErrorKind::LengthMismatch, "sigma and prescribed diagonal differ in length");
    auto logs_sorted = [](std::span<const double> v) {
        std::vector<double> out;
        out.reserve(v.size());
        for (double x : v) {
            if (!(x > 0.0) || !std::isfinite(x))
                raise(ErrorKind::LengthMismatch, "values must be positive and finite");
            out.push_back(std::log(x));
        }
        std::sort(out.begin(), out.end(), std::greater<>());
        return out;
    };
    const std::vector<double> ls = logs_sorted(sigma);
    const std::vector<double> lp = logs_sorted(prescribed);

    constexpr double kTol = 1e-10; // relative, on products
    double sum_s = 0.0, sum_p = 0.0;
    for (std::size_t k = 0; k < ls.size(); ++k) {
        sum_s += ls[k];
        sum_p += lp[k];
        if (k + 1 < ls.size()) {
            if (sum_p > sum_s + kTol) return false;
        } else {
            if (std::abs(sum_p - sum_s) > kTol) return false;
        }
    }
    return true;
}

JointTriangularization jet_shared_left(const Matrix& h1, const Matrix& h2, double proper_tol) {
    if (h1.rows() != h2.rows())
        raise(ErrorKind::DimensionMismatch, "jet_shared_left requires a common row count");
    require_proper(h1, proper_tol, "jet_shared_left");
    require_proper(h2, proper_tol, "jet_shared_left");

    const std::size_t n_r = h1.rows();
    const LqResult lq1 = linalg::qr_lower(h1);
    const LqResult lq2 = linalg::qr_lower(h2);
    SquareJetLeft core = jet_square_shared_left(lq1.square_factor(), lq2.square_factor());

    auto compose = [&](const LqResult& lq, const Matrix& t_core,
                       const Matrix& w) -> JointTriangularization::Factor {
        const std::size_t n_t = lq.q.cols();
        Matrix v_k = lq.q.transposed() * blkdiag_identity(w, n_t - n_r);
        Matrix t_k(n_r, n_t);
        t_k.set_block(0, 0, t_core);
        return {std::move(v_k), std::move(t_k)};
    };

    JointTriangularization jt;
    jt.orientation = Orientation::SharedLeft;
    jt.shared = core.shared;
    jt.per_matrix.push_back(compose(lq1, core.t1, core.w1));
    jt.per_matrix.push_back(compose(lq2, core.t2, core.w2));
    jt.diag = std::move(core.diag);
    return jt;
}

JointTriangularization jet_shared_right(const Matrix& a1, const Matrix& a2, double proper_tol) {
    if (a1.cols() != a2.cols())
        raise(ErrorKind::DimensionMismatch, "jet_shared_right requires a common column count");
    const bool wide1 = a1.rows() < a1.cols();
    const bool wide2 = a2.rows() < a2.cols();
    if (wide1 != wide2)
        raise(ErrorKind::DimensionMismatch,
              "jet_shared_right cannot mix wide and tall inputs");
    if (wide1) {
        // A shared right factor only exists on the short side; factor the
        // transposes. The verifier reconstructs transposed originals.
        if (a1.rows() != a2.rows())
            raise(ErrorKind::DimensionMismatch,
                  "wide inputs require a common row count");
        return jet_shared_right(a1.transposed(), a2.transposed(), proper_tol);
    }

    require_unit_gram(a1, proper_tol, "jet_shared_right");
    require_unit_gram(a2, proper_tol, "jet_shared_right");

    const std::size_t n = a1.cols();
    const QrResult qr1 = linalg::householder_qr(a1);
    const QrResult qr2 = linalg::householder_qr(a2);
    SquareJet core = jet_square_shared_right(qr1.r.block(0, 0, n, n), qr2.r.block(0, 0, n, n));

    auto compose = [&](const QrResult& qr, const Matrix& w,
                       const Matrix& l) -> JointTriangularization::Factor {
        const std::size_t m = qr.q.rows();
        Matrix u_k = qr.q * blkdiag_identity(w, m - n);
        Matrix t_k(m, n);
        t_k.set_block(0, 0, l);
        return {std::move(u_k), std::move(t_k)};
    };

    JointTriangularization jt;
    jt.orientation = Orientation::SharedRight;
    jt.shared = core.shared;
    jt.per_matrix.push_back(compose(qr1, core.w1, core.l1));
    jt.per_matrix.push_back(compose(qr2, core.w2, core.l2));
    jt.diag = std::move(core.diag);
    return jt;
}

VerifyReport verify_joint_triangularization(const JointTriangularization& jt,
                                            const std::vector<Matrix>& originals,
                                            const linalg::Tolerances& tol) {
    if (jt.per_matrix.size() != originals.size())
        raise(ErrorKind::DimensionMismatch, "factor count does not match original count");
    if (jt.per_matrix.empty())
        raise(ErrorKind::DimensionMismatch, "nothing to verify");

    VerifyReport rep;
    rep.max_orthonormality = orthonormality_residual(jt.shared);

    std::size_t diag_len = std::numeric_limits<std::size_t>::max();
    for (const auto& f : jt.per_matrix)
        diag_len = std::min(diag_len, std::min(f.t.rows(), f.t.cols()));

    for (std::size_t k = 0; k < jt.per_matrix.size(); ++k) {
        const auto& f = jt.per_matrix[k];
        rep.max_orthonormality = std::max(rep.max_orthonormality, orthonormality_residual(f.u));

        Matrix recon;
        if (jt.orientation == Orientation::SharedLeft) {
            recon = jt.shared * f.t * f.u.transposed();
        } else {
            recon = f.u * f.t * jt.shared.transposed();
        }
        const Matrix& orig = originals[k];
        if (recon.rows() == orig.rows() && recon.cols() == orig.cols()) {
            rep.reconstruction.push_back(relative_residual(recon, orig));
        } else if (recon.rows() == orig.cols() && recon.cols() == orig.rows()) {
            rep.reconstruction.push_back(relative_residual(recon, orig.transposed()));
        } else {
            raise(ErrorKind::DimensionMismatch, "factor shapes do not match original");
        }

        for (std::size_t i = 0; i < f.t.rows(); ++i)
            for (std::size_t j = i + 1; j < f.t.cols(); ++j)
                rep.max_above_diagonal = std::max(rep.max_above_diagonal, std::abs(f.t(i, j)));

        for (std::size_t l = 0; l < k; ++l) {
            for (std::size_t i = 0; i < diag_len; ++i) {
                const double disparity = std::abs(jt.per_matrix[k].t(i, i) - jt.per_matrix[l].t(i, i));
                rep.max_diag_disparity = std::max(rep.max_diag_disparity, disparity);
            }
        }
    }

    bool pass = rep.max_above_diagonal <= tol.above_diagonal &&
                rep.max_diag_disparity <= tol.diagonal_match &&
                rep.max_orthonormality <= tol.orthonormality;
    for (double r : rep.reconstruction) pass = pass && r <= tol.reconstruction;
    rep.pass = pass;

    std::ostringstream os;
    os << (pass ? "pass" : "fail") << ": recon=[";
    for (std::size_t k = 0; k < rep.reconstruction.size(); ++k)
        os << (k ? ", " : "") << rep.reconstruction[k];
    os << "] above_diag=" << rep.max_above_diagonal
       << " diag_disparity=" << rep.max_diag_disparity
       << " orthonormality=" << rep.max_orthonormality;
    rep.detail = os.str();
    return rep;
}

std::size_t min_blocks(std::size_t n_r, std::size_t k_users) {
    if (k_users < 2) raise(ErrorKind::DimensionMismatch, "need at least two users");
    std::size_t value = 1;
    for (std::size_t i = 2; i < k_users; ++i) {
        if (value > std::numeric_limits<std::size_t>::max() / std::max<std::size_t>(n_r, 1))
            raise(ErrorKind::TooFewBlocks, "required block count overflows");
        value *= n_r;
    }
    return value;
}

TimeExtension build_time_extension(const std::vector<Matrix>& channels, std::size_t n_blocks) {
    if (channels.size() < 2)
        raise(ErrorKind::DimensionMismatch, "time extension needs at least two channels");
    const std::size_t n_r = channels.front().rows();
    for (const auto& h : channels) {
        if (h.rows() != n_r)
            raise(ErrorKind::DimensionMismatch, "channels must share the receive dimension");
        require_proper(h, 1e-6, "build_time_extension");
    }
    const std::size_t need = min_blocks(n_r, channels.size());
    if (n_blocks < need) {
        std::ostringstream os;
        os << "need at least N_r^(K-2) = " << need << " blocks, got " << n_blocks;
        raise(ErrorKind::TooFewBlocks, os.str());
    }

    TimeExtension ext;
    ext.n_blocks = n_blocks;
    ext.base_rows = n_r;
    ext.users = channels.size();
    ext.truncated_rows = n_blocks - need + 1;
    for (const auto& h : channels) {
        Matrix big(n_blocks * h.rows(), n_blocks * h.cols());
        for (std::size_t b = 0; b < n_blocks; ++b) big.set_block(b * h.rows(), b * h.cols(), h);
        ext.extended.push_back(std::move(big));
    }
    return ext;
}

double extension_efficiency(std::size_t n_r, std::size_t k_users, std::size_t n_blocks) {
    const std::size_t need = min_blocks(n_r, k_users);
    if (n_blocks < need) {
        std::ostringstream os;
        os << "need at least N_r^(K-2) = " << need << " blocks, got " << n_blocks;
        raise(ErrorKind::TooFewBlocks, os.str());
    }
    return static_cast<double>(n_blocks - need + 1) / static_cast<double>(n_blocks);
}

} // namespace dmimo::decomp
