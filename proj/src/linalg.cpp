#include "dmimo/linalg.hpp"

#include "dmimo/errors.hpp"
#include "dmimo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace dmimo::linalg {

namespace {

constexpr int kMaxJacobiSweeps = 60;
constexpr double kJacobiTol = 1e-14;

// One-sided Jacobi on the rows of w: finds rotations such that the rows of
// the transformed w are mutually orthogonal, accumulating the transpose of
// the rotation product in vt. Rows of w are the columns of the tall matrix
// being decomposed, so every rotation touches contiguous memory.
void jacobi_orthogonalize_rows(Matrix& w, Matrix& vt) {
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    const auto& k = kernels::active();

    for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
        std::size_t rotations = 0;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                const double alpha = k.sum_sq(w.row_ptr(p), n);
                const double beta = k.sum_sq(w.row_ptr(q), n);
                const double gamma = k.dot(w.row_ptr(p), w.row_ptr(q), n);
                const double scale = std::sqrt(alpha) * std::sqrt(beta);
                if (scale <= std::numeric_limits<double>::min() ||
                    std::abs(gamma) <= kJacobiTol * scale) {
                    continue;
                }
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                // Column rotation of the tall matrix: w_p' = c w_p - s w_q.
                k.rot(w.row_ptr(p), w.row_ptr(q), n, c, -s);
                k.rot(vt.row_ptr(p), vt.row_ptr(q), m, c, -s);
                ++rotations;
            }
        }
        if (rotations == 0) return;
    }
    raise(ErrorKind::ConvergenceFailure, "Jacobi SVD did not converge");
}

// SVD of a wide-or-square matrix (rows <= cols).
SvdResult svd_wide(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();

    Matrix w = a;                    // rows of w = columns of a^T
    Matrix vt = Matrix::identity(m); // accumulates rotations, transposed
    jacobi_orthogonalize_rows(w, vt);

    std::vector<double> sigma(m);
    for (std::size_t j = 0; j < m; ++j)
        sigma[j] = std::sqrt(kernels::active().sum_sq(w.row_ptr(j), n));

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    const double sigma_max = sigma.empty() ? 0.0 : sigma[order[0]];
    const double tiny = std::max(sigma_max, 1.0) * std::numeric_limits<double>::min();

    SvdResult out;
    out.u = Matrix(m, m);
    out.v = Matrix(n, m);
    out.sigma.resize(m);
    for (std::size_t jj = 0; jj < m; ++jj) {
        const std::size_t j = order[jj];
        out.sigma[jj] = sigma[j];
        for (std::size_t i = 0; i < m; ++i) out.u(i, jj) = vt(j, i);
        if (sigma[j] > tiny) {
            const double inv = 1.0 / sigma[j];
            for (std::size_t i = 0; i < n; ++i) out.v(i, jj) = w(j, i) * inv;
        }
    }
    // Columns tied to a numerically zero singular value carry no signal;
    // fill them with an orthonormal completion so v stays orthonormal.
    for (std::size_t jj = 0; jj < m; ++jj) {
        if (out.sigma[jj] > tiny) continue;
        for (std::size_t cand = 0; cand < n; ++cand) {
            std::vector<double> e(n, 0.0);
            e[cand] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t col = 0; col < m; ++col) {
                    if (out.sigma[col] <= tiny && col >= jj) continue; // not filled yet
                    double d = 0.0;
                    for (std::size_t i = 0; i < n; ++i) d += e[i] * out.v(i, col);
                    for (std::size_t i = 0; i < n; ++i) e[i] -= d * out.v(i, col);
                }
            }
            const double norm = std::sqrt(kernels::active().sum_sq(e.data(), n));
            if (norm > 1e-8) {
                for (std::size_t i = 0; i < n; ++i) out.v(i, jj) = e[i] / norm;
                break;
            }
        }
    }
    return out;
}

void apply_reflector_left(Matrix& x, std::size_t k, const std::vector<double>& v, double tau,
                          std::size_t col0) {
    // x[k.., col0..] -= tau * v (v^T x[k.., col0..])
    const std::size_t ncols = x.cols() - col0;
    std::vector<double> t(ncols, 0.0);
    const auto& ker = kernels::active();
    for (std::size_t i = 0; i < v.size(); ++i)
        ker.axpy(v[i], x.row_ptr(k + i) + col0, t.data(), ncols);
    for (std::size_t i = 0; i < v.size(); ++i)
        ker.axpy(-tau * v[i], t.data(), x.row_ptr(k + i) + col0, ncols);
}

} // namespace

SvdResult svd(const Matrix& a) {
    if (a.empty()) raise(ErrorKind::DimensionMismatch, "svd of empty matrix");
    if (!a.is_finite()) raise(ErrorKind::DimensionMismatch, "svd input has non-finite entries");
    if (a.rows() <= a.cols()) return svd_wide(a);
    SvdResult t = svd_wide(a.transposed());
    std::swap(t.u, t.v);
    return t;
}

QrResult householder_qr(const Matrix& x) {
    const std::size_t p = x.rows();
    const std::size_t q = x.cols();
    if (p < q) raise(ErrorKind::DimensionMismatch, "householder_qr expects rows >= cols");

    Matrix r = x;
    std::vector<std::vector<double>> vs(q);
    std::vector<double> taus(q, 0.0);

    for (std::size_t k = 0; k < q; ++k) {
        std::vector<double> col(p - k);
        for (std::size_t i = k; i < p; ++i) col[i - k] = r(i, k);
        double tail_sq = 0.0;
        for (std::size_t i = 1; i < col.size(); ++i) tail_sq += col[i] * col[i];
        if (tail_sq == 0.0) {
            // Column already triangular; leave the sign fix to the caller.
            continue;
        }
        const double norm = std::sqrt(col[0] * col[0] + tail_sq);
        const double sign = col[0] >= 0.0 ? 1.0 : -1.0;
        col[0] += sign * norm;
        const double vsq = kernels::active().sum_sq(col.data(), col.size());
        const double tau = 2.0 / vsq;
        apply_reflector_left(r, k, col, tau, k);
        vs[k] = std::move(col);
        taus[k] = tau;
        for (std::size_t i = k + 1; i < p; ++i) r(i, k) = 0.0; // exact zeros below the diagonal
    }

    Matrix qm = Matrix::identity(p);
    for (std::size_t kk = q; kk-- > 0;) {
        if (!vs[kk].empty()) apply_reflector_left(qm, kk, vs[kk], taus[kk], 0);
    }
    return {std::move(qm), std::move(r)};
}

LqResult qr_lower(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (m > n)
        raise(ErrorKind::DimensionMismatch, "qr_lower expects no fewer columns than rows");
    if (!a.is_finite())
        raise(ErrorKind::DimensionMismatch, "qr_lower input has non-finite entries");

    QrResult qr = householder_qr(a.transposed());
    LqResult out;
    out.t = qr.r.transposed(); // [L | 0], zeros above the diagonal by construction
    out.q = qr.q.transposed();

    // Nonnegative-diagonal convention: fold a +-1 diagonal into both factors.
    double max_diag = 0.0;
    for (std::size_t i = 0; i < m; ++i) max_diag = std::max(max_diag, std::abs(out.t(i, i)));
    for (std::size_t i = 0; i < m; ++i) {
        if (out.t(i, i) < 0.0) {
            for (std::size_t r = i; r < m; ++r) out.t(r, i) = -out.t(r, i);
            kernels::active().scal(-1.0, out.q.row_ptr(i), n);
        }
    }
    double min_diag = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) min_diag = std::min(min_diag, out.t(i, i));
    if (min_diag <= kRankRatio * max_diag)
        raise(ErrorKind::RankDeficient, "numerical row rank below full");
    return out;
}

QlResult ql(const Matrix& a) {
    if (!a.is_square()) raise(ErrorKind::DimensionMismatch, "ql expects a square matrix");
    const std::size_t n = a.rows();
    QrResult qr = householder_qr(a.reversed_both());
    QlResult out;
    out.q = qr.q.reversed_both();
    out.l = qr.r.reversed_both();
    // Sign fix: a = (q D)(D l); D l flips rows of l, q D flips columns of q.
    for (std::size_t i = 0; i < n; ++i) {
        if (out.l(i, i) < 0.0) {
            kernels::active().scal(-1.0, out.l.row_ptr(i), n);
            for (std::size_t r = 0; r < n; ++r) out.q(r, i) = -out.q(r, i);
        }
    }
    return out;
}

Matrix complete_orthonormal(const Matrix& thin) {
    const std::size_t n = thin.rows();
    const std::size_t m = thin.cols();
    if (m > n) raise(ErrorKind::DimensionMismatch, "cannot complete: more columns than rows");
    Matrix full(n, n);
    full.set_block(0, 0, thin);
    if (m == n) return full;
    QrResult qr = householder_qr(thin);
    for (std::size_t j = m; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) full(i, j) = qr.q(i, j);
    return full;
}

Matrix cholesky(const Matrix& s) {
    if (!s.is_square()) raise(ErrorKind::DimensionMismatch, "cholesky expects a square matrix");
    const std::size_t n = s.rows();
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = s(i, j) - kernels::active().dot(l.row_ptr(i), l.row_ptr(j), j);
            if (i == j) {
                if (sum <= 0.0)
                    raise(ErrorKind::ConvergenceFailure, "matrix not positive definite");
                l(i, i) = std::sqrt(sum);
            } else {
                l(i, j) = sum / l(j, j);
            }
        }
    }
    return l;
}

double logdet2_spd(const Matrix& s) {
    Matrix l = cholesky(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) acc += std::log2(l(i, i));
    return 2.0 * acc;
}

double det_gram(const Matrix& h) {
    SvdResult d = svd(h);
    double prod = 1.0;
    for (double s : d.sigma) prod *= s * s;
    return prod;
}

PropernessReport validate_proper(const Matrix& h, double tol) {
    PropernessReport rep;
    rep.shape_ok = h.cols() >= h.rows() && h.rows() > 0;
    if (!rep.shape_ok)
        rep.failures.push_back("shape: needs no fewer columns than rows");
    if (!h.is_finite()) {
        rep.failures.push_back("entries: non-finite values present");
        return rep;
    }
    if (h.empty()) return rep;

    SvdResult d = svd(h);
    const double sigma_max = d.sigma.empty() ? 0.0 : d.sigma.front();
    rep.numerical_rank = 0;
    double prod = 1.0;
    for (double s : d.sigma) {
        if (s > kRankRatio * sigma_max) ++rep.numerical_rank;
        prod *= s * s;
    }
    rep.det_gram = prod;
    rep.full_rank = rep.numerical_rank == h.rows();
    if (!rep.full_rank) {
        std::ostringstream os;
        os << "rank: numerical rank " << rep.numerical_rank << " < " << h.rows();
        rep.failures.push_back(os.str());
    }
    rep.det_ok = std::abs(rep.det_gram - 1.0) <= tol;
    if (!rep.det_ok) {
        std::ostringstream os;
        os << "determinant: det(h h^T) = " << rep.det_gram << ", |det - 1| > " << tol;
        rep.failures.push_back(os.str());
    }
    rep.accepted = rep.shape_ok && rep.full_rank && rep.det_ok;
    return rep;
}

ProperChannel make_proper(const Matrix& h, double power, double tol) {
    PropernessReport rep = validate_proper(h, tol);
    if (!rep.accepted) {
        std::string what = "channel is not proper:";
        for (const auto& f : rep.failures) what += " [" + f + "]";
        raise(ErrorKind::NotProper, what);
    }
    return {h, power, rep.det_gram};
}

ProperChannel normalize_to_proper(const Matrix& h, double power) {
    if (h.rows() > h.cols())
        raise(ErrorKind::DimensionMismatch, "channel needs no fewer columns than rows");
    const std::size_t m = h.rows();
    SvdResult d = svd(h);
    const double sigma_max = d.sigma.front();
    double a = 1.0;
    for (double s : d.sigma) {
        if (s <= kRankRatio * sigma_max)
            raise(ErrorKind::RankDeficient, "cannot normalize a rank-deficient channel");
        a *= s * s;
    }
    if (std::abs(a - 1.0) <= 1e-12) return {h, power, a};

    const double scale = std::pow(a, 1.0 / (2.0 * static_cast<double>(m)));
    Matrix hn = h;
    hn.scale(1.0 / scale);
    const double pn = power * std::pow(a, 1.0 / static_cast<double>(m));
    const double dg = det_gram(hn);
    return {std::move(hn), pn, dg};
}

} // namespace dmimo::linalg
