// Runtime-dispatched vector kernels.
//
// Scalar reference implementations always exist; an AVX2 variant is compiled
// on x86 and selected at startup when the CPU supports it. The environment
// variable PROXSAMP_KERNELS=scalar|avx2|auto pins the choice. Both backends
// are exposed so tests can check them against each other.

#pragma once

#include <cstddef>

namespace proxsamp::kernels {

enum class Backend { scalar, avx2 };

struct Ops {
    // sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum_i a[i]^2
    double (*nrm2sq)(const double* a, std::size_t n);
    // sum_i (a[i]-b[i])^2
    double (*dist2)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out[i] = a[i] + alpha * b[i]
    void (*add_scaled)(const double* a, double alpha, const double* b, double* out, std::size_t n);
    // out[i] = alpha * (a[i] - b[i])
    void (*scale_diff)(double alpha, const double* a, const double* b, double* out, std::size_t n);
};

// Table for the backend currently in use (resolved once, honoring the env var).
const Ops& active();
Backend active_backend();

// Explicitly switch backends; returns false (and leaves the current backend
// in place) when the requested one is unavailable on this CPU/build.
bool select(Backend b);

bool avx2_available();

// Direct access to a specific backend's table; used by equivalence tests.
// Returns nullptr when the backend is not built/supported.
const Ops* table(Backend b);

const char* backend_name(Backend b);

}  // namespace proxsamp::kernels
