#include "dmimo/kernels.hpp"

#include <cmath>

namespace dmimo::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sum_sq_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

void rot_scalar(double* x, double* y, std::size_t n, double c, double s) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi + s * yi;
        y[i] = c * yi - s * xi;
    }
}

void mod_wrap_scalar(double* x, std::size_t n, double halfwidth) {
    const double width = 2.0 * halfwidth;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] -= width * std::floor((x[i] + halfwidth) / width);
    }
}

} // namespace

const Table& scalar() {
    static const Table table = {
        dot_scalar, axpy_scalar, scal_scalar, sum_sq_scalar, rot_scalar, mod_wrap_scalar, "scalar",
    };
    return table;
}

} // namespace dmimo::kernels
