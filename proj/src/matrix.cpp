#include "dmimo/matrix.hpp"

#include "dmimo/errors.hpp"
#include "dmimo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dmimo {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_)
            raise(ErrorKind::DimensionMismatch, "ragged initializer list");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::from_data(std::size_t rows, std::size_t cols, std::vector<double> data) {
    if (data.size() != rows * cols)
        raise(ErrorKind::DimensionMismatch, "data length does not match rows*cols");
    Matrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.data_ = std::move(data);
    return m;
}

bool Matrix::is_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::reversed_both() const {
    Matrix r(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) r(i, j) = (*this)(rows_ - 1 - i, cols_ - 1 - j);
    return r;
}

Matrix Matrix::block(std::size_t row0, std::size_t col0, std::size_t nrows, std::size_t ncols) const {
    if (row0 + nrows > rows_ || col0 + ncols > cols_)
        raise(ErrorKind::DimensionMismatch, "block exceeds matrix bounds");
    Matrix b(nrows, ncols);
    for (std::size_t i = 0; i < nrows; ++i)
        for (std::size_t j = 0; j < ncols; ++j) b(i, j) = (*this)(row0 + i, col0 + j);
    return b;
}

void Matrix::set_block(std::size_t row0, std::size_t col0, const Matrix& b) {
    if (row0 + b.rows() > rows_ || col0 + b.cols() > cols_)
        raise(ErrorKind::DimensionMismatch, "block exceeds matrix bounds");
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) (*this)(row0 + i, col0 + j) = b(i, j);
}

std::vector<double> Matrix::diagonal_vector() const {
    const std::size_t n = std::min(rows_, cols_);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = (*this)(i, i);
    return d;
}

double Matrix::frobenius_norm() const {
    return std::sqrt(kernels::active().sum_sq(data_.data(), data_.size()));
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

void Matrix::scale(double alpha) {
    kernels::active().scal(alpha, data_.data(), data_.size());
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        raise(ErrorKind::DimensionMismatch, "matrix addition shape mismatch");
    kernels::active().axpy(1.0, other.data_.data(), data_.data(), data_.size());
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        raise(ErrorKind::DimensionMismatch, "matrix subtraction shape mismatch");
    kernels::active().axpy(-1.0, other.data_.data(), data_.data(), data_.size());
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        raise(ErrorKind::DimensionMismatch, "matrix product shape mismatch");
    Matrix c(a.rows(), b.cols());
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row_ptr(i);
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double ail = a(i, l);
            if (ail != 0.0) k.axpy(ail, b.row_ptr(l), ci, b.cols());
        }
    }
    return c;
}

Matrix operator+(Matrix a, const Matrix& b) {
    a += b;
    return a;
}

Matrix operator-(Matrix a, const Matrix& b) {
    a -= b;
    return a;
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a.data() == b.data();
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.cols())
        raise(ErrorKind::DimensionMismatch, "matvec shape mismatch");
    std::vector<double> y(a.rows());
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = k.dot(a.row_ptr(i), x.data(), a.cols());
    return y;
}

std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.rows())
        raise(ErrorKind::DimensionMismatch, "matvec shape mismatch");
    std::vector<double> y(a.cols(), 0.0);
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < a.rows(); ++i) k.axpy(x[i], a.row_ptr(i), y.data(), a.cols());
    return y;
}

double orthonormality_residual(const Matrix& q) {
    // Q^T Q - I without forming the transpose: entry (i,j) is col_i . col_j.
    const std::size_t n = q.cols();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t r = 0; r < q.rows(); ++r) dot += q(r, i) * q(r, j);
            const double target = (i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(dot - target));
        }
    }
    return worst;
}

double relative_residual(const Matrix& a, const Matrix& reference) {
    if (a.rows() != reference.rows() || a.cols() != reference.cols())
        raise(ErrorKind::DimensionMismatch, "residual shape mismatch");
    Matrix diff = a;
    diff -= reference;
    const double denom = std::max(reference.frobenius_norm(), std::numeric_limits<double>::min());
    return diff.frobenius_norm() / denom;
}

} // namespace dmimo
