#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dmimo {

/// Dense real matrix, row-major. Carrier for channels, orthogonal factors,
/// triangular factors and covariances. Entries are kept finite; factory
/// functions and element writes do not re-validate, use is_finite() where
/// an input boundary needs the check.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> d);
    static Matrix from_data(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
    std::span<double> row_span(std::size_t i) { return {row_ptr(i), cols_}; }
    std::span<const double> row_span(std::size_t i) const { return {row_ptr(i), cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool is_finite() const;
    bool is_square() const { return rows_ == cols_; }

    Matrix transposed() const;
    /// Rows and columns both reversed (J * A * J with J the exchange matrix).
    Matrix reversed_both() const;
    Matrix block(std::size_t row0, std::size_t col0, std::size_t nrows, std::size_t ncols) const;
    void set_block(std::size_t row0, std::size_t col0, const Matrix& b);

    std::vector<double> diagonal_vector() const;

    double frobenius_norm() const;
    double max_abs() const;

    void scale(double alpha);

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
bool operator==(const Matrix& a, const Matrix& b);

/// y = A x
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
/// y = A^T x
std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x);

/// max |(Q^T Q - I)_{ij}| — orthonormal-columns residual.
double orthonormality_residual(const Matrix& q);
/// ||A - B||_F / max(||A||_F, tiny) — relative reconstruction residual.
double relative_residual(const Matrix& a, const Matrix& reference);

} // namespace dmimo
