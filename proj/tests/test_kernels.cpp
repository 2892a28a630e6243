// Backend equivalence: the AVX2 kernels must agree with the scalar reference
// on every length (including remainders) to reduction rounding.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "proxsamp/kernels.hpp"
#include "proxsamp/rng.hpp"

using namespace proxsamp;

namespace {

std::vector<double> random_array(RngStream& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal() * 3.0;
    return v;
}

const std::vector<std::size_t> kLengths = {0, 1, 2, 3, 4, 5, 7, 8, 9, 12, 15,
                                           16, 17, 31, 32, 33, 64, 67, 1000};

}  // namespace

TEST_CASE("scalar kernels: known values") {
    const kernels::Ops& ops = *kernels::table(kernels::Backend::scalar);
    std::vector<double> ones(10, 1.0), twos(10, 2.0);
    CHECK(ops.dot(ones.data(), twos.data(), 10) == doctest::Approx(20.0));
    CHECK(ops.nrm2sq(twos.data(), 10) == doctest::Approx(40.0));
    CHECK(ops.dist2(ones.data(), twos.data(), 10) == doctest::Approx(10.0));

    std::vector<double> y(10, 1.0);
    ops.axpy(0.5, twos.data(), y.data(), 10);
    for (double v : y) CHECK(v == doctest::Approx(2.0));

    std::vector<double> out(10);
    ops.add_scaled(ones.data(), -1.0, twos.data(), out.data(), 10);
    for (double v : out) CHECK(v == doctest::Approx(-1.0));
    ops.scale_diff(3.0, twos.data(), ones.data(), out.data(), 10);
    for (double v : out) CHECK(v == doctest::Approx(3.0));
}

TEST_CASE("avx2 kernels match the scalar reference") {
    const kernels::Ops* simd = kernels::table(kernels::Backend::avx2);
    if (simd == nullptr) {
        MESSAGE("AVX2 not available on this CPU/build; equivalence suite skipped");
        return;
    }
    const kernels::Ops& ref = *kernels::table(kernels::Backend::scalar);
    RngStream rng(7);

    for (std::size_t n : kLengths) {
        CAPTURE(n);
        const std::vector<double> a = random_array(rng, n);
        const std::vector<double> b = random_array(rng, n);
        const double scale = 1.0 + std::abs(ref.nrm2sq(a.data(), n)) +
                             std::abs(ref.nrm2sq(b.data(), n));

        CHECK(std::abs(simd->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <=
              1e-12 * scale);
        CHECK(std::abs(simd->nrm2sq(a.data(), n) - ref.nrm2sq(a.data(), n)) <= 1e-12 * scale);
        CHECK(std::abs(simd->dist2(a.data(), b.data(), n) - ref.dist2(a.data(), b.data(), n)) <=
              1e-12 * scale);

        std::vector<double> y1 = b, y2 = b;
        ref.axpy(0.37, a.data(), y1.data(), n);
        simd->axpy(0.37, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(y1[i] - y2[i]) <= 1e-14 * (1.0 + std::abs(y1[i])));

        std::vector<double> o1(n), o2(n);
        ref.add_scaled(a.data(), -1.7, b.data(), o1.data(), n);
        simd->add_scaled(a.data(), -1.7, b.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(o1[i] - o2[i]) <= 1e-14 * (1.0 + std::abs(o1[i])));

        ref.scale_diff(2.3, a.data(), b.data(), o1.data(), n);
        simd->scale_diff(2.3, a.data(), b.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == o2[i]);
    }
}

TEST_CASE("backend selection") {
    const kernels::Backend before = kernels::active_backend();
    REQUIRE(kernels::select(kernels::Backend::scalar));
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
    if (kernels::avx2_available()) {
        REQUIRE(kernels::select(kernels::Backend::avx2));
        CHECK(kernels::active_backend() == kernels::Backend::avx2);
    } else {
        CHECK_FALSE(kernels::select(kernels::Backend::avx2));
        CHECK(kernels::active_backend() == kernels::Backend::scalar);
    }
    kernels::select(before);
}
