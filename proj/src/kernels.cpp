// Backend selection. The choice is made once per process (or explicitly via
// select()); PROXSAMP_KERNELS=scalar|avx2|auto pins it from the environment.

#include "proxsamp/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace proxsamp::kernels {

namespace scalar {
double dot(const double*, const double*, std::size_t);
double nrm2sq(const double*, std::size_t);
double dist2(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void add_scaled(const double*, double, const double*, double*, std::size_t);
void scale_diff(double, const double*, const double*, double*, std::size_t);
}  // namespace scalar

#if PROXSAMP_BUILD_AVX2
namespace avx2 {
double dot(const double*, const double*, std::size_t);
double nrm2sq(const double*, std::size_t);
double dist2(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void add_scaled(const double*, double, const double*, double*, std::size_t);
void scale_diff(double, const double*, const double*, double*, std::size_t);
}  // namespace avx2
#endif

namespace {

constexpr Ops kScalarOps{scalar::dot,  scalar::nrm2sq,     scalar::dist2,
                         scalar::axpy, scalar::add_scaled, scalar::scale_diff};

#if PROXSAMP_BUILD_AVX2
constexpr Ops kAvx2Ops{avx2::dot,  avx2::nrm2sq,     avx2::dist2,
                       avx2::axpy, avx2::add_scaled, avx2::scale_diff};
#endif

bool cpu_has_avx2() {
#if PROXSAMP_BUILD_AVX2
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct State {
    const Ops* ops;
    Backend backend;
};

State resolve_initial() {
    const char* env = std::getenv("PROXSAMP_KERNELS");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) {
        return {&kScalarOps, Backend::scalar};
    }
#if PROXSAMP_BUILD_AVX2
    const bool want_avx2 =
        env == nullptr || std::strcmp(env, "auto") == 0 || std::strcmp(env, "avx2") == 0;
    if (want_avx2 && cpu_has_avx2()) {
        return {&kAvx2Ops, Backend::avx2};
    }
#endif
    return {&kScalarOps, Backend::scalar};
}

State& state() {
    static State s = resolve_initial();
    return s;
}

}  // namespace

const Ops& active() { return *state().ops; }

Backend active_backend() { return state().backend; }

bool avx2_available() { return cpu_has_avx2(); }

const Ops* table(Backend b) {
    switch (b) {
        case Backend::scalar:
            return &kScalarOps;
        case Backend::avx2:
#if PROXSAMP_BUILD_AVX2
            if (cpu_has_avx2()) return &kAvx2Ops;
#endif
            return nullptr;
    }
    return nullptr;
}

bool select(Backend b) {
    const Ops* ops = table(b);
    if (ops == nullptr) return false;
    state() = {ops, b};
    return true;
}

const char* backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace proxsamp::kernels
