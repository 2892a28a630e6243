// Dense vectors in R^d and the handful of operations the samplers need,
// routed through the kernel dispatch table.

#pragma once

#include <cassert>
#include <cmath>
#include <vector>

#include "proxsamp/kernels.hpp"

namespace proxsamp {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    return kernels::active().dot(a.data(), b.data(), a.size());
}

inline double nrm2sq(const Vec& a) {
    return kernels::active().nrm2sq(a.data(), a.size());
}

inline double nrm2(const Vec& a) { return std::sqrt(nrm2sq(a)); }

inline double dist2(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    return kernels::active().dist2(a.data(), b.data(), a.size());
}

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    assert(x.size() == y.size());
    kernels::active().axpy(alpha, x.data(), y.data(), x.size());
}

// a + alpha * b
inline Vec add_scaled(const Vec& a, double alpha, const Vec& b) {
    assert(a.size() == b.size());
    Vec out(a.size());
    kernels::active().add_scaled(a.data(), alpha, b.data(), out.data(), a.size());
    return out;
}

// alpha * (a - b)
inline Vec scale_diff(double alpha, const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    Vec out(a.size());
    kernels::active().scale_diff(alpha, a.data(), b.data(), out.data(), a.size());
    return out;
}

inline bool all_finite(const Vec& a) {
    for (double v : a) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace proxsamp
