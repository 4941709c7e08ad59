#pragma once

#include <cstddef>

namespace dmimo::kernels {

/// Flat-array arithmetic kernels underneath the matrix layer and the
/// simulator's inner loops. Every entry has a scalar reference
/// implementation; on x86-64 an AVX2/FMA variant is selected at runtime
/// when the CPU supports it. Variants are equivalence-tested against the
/// scalar reference (accumulating kernels agree to rounding, elementwise
/// kernels bit-exactly).
struct Table {
    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// x[i] *= alpha
    void (*scal)(double alpha, double* x, std::size_t n);
    /// sum_i a[i]^2
    double (*sum_sq)(const double* a, std::size_t n);
    /// Plane rotation applied in place:
    ///   x[i] <- c*x[i] + s*y[i],  y[i] <- -s*x[i] + c*y[i]
    void (*rot)(double* x, double* y, std::size_t n, double c, double s);
    /// Wrap each entry into [-w, w): x[i] <- x[i] - 2w*floor((x[i]+w)/(2w)).
    void (*mod_wrap)(double* x, std::size_t n, double halfwidth);
    /// Backend name ("scalar", "avx2").
    const char* name;
};

/// Reference implementation; always available.
const Table& scalar();

/// AVX2/FMA implementation, or nullptr when unsupported (non-x86 build or
/// CPU without AVX2).
const Table* avx2();

/// The backend in use. Defaults to the widest supported variant; the
/// DMIMO_KERNELS environment variable ("scalar" or "avx2") overrides the
/// choice, which is fixed for the lifetime of the process.
const Table& active();

} // namespace dmimo::kernels
