// Verification harness: 1D quadrature oracles, Kolmogorov-Smirnov checks,
// rejection-rate audits, envelope fuzzing, and the radial integral bound.

#pragma once

#include <cstdint>
#include <vector>

#include "proxsamp/asf.hpp"
#include "proxsamp/potential.hpp"
#include "proxsamp/rng.hpp"

namespace proxsamp {

struct KsReport {
    double statistic = 0.0;
    std::int64_t n = 0;
    double threshold = 0.0;
    bool pass = false;
};

// Normalized density of pi(x) ~ exp(-g(x)) on a 1D grid, refined until the
// trapezoid normalizer and CDF stabilize below 1e-9. The grid covers every
// point where g - min g <= 60, which spans well over 12 standard deviations.
struct QuadratureDensity {
    std::vector<double> grid;
    std::vector<double> log_density;  // normalized: trapezoid mass is 1
    std::vector<double> cdf;
    double normalizer = 0.0;  // trapezoid mass of exp(-(g - min g)) before normalization

    double cdf_at(double x) const;
    double inverse_cdf(double u) const;
    double mean() const;
    double variance() const;
};

QuadratureDensity exact_cdf_1d(const RegularizedProblem& p, std::size_t resolution = 8193);

KsReport ks_test(std::vector<double> samples, const QuadratureDensity& ref, double threshold);

enum class RgoRegime { prox, bundle, smooth };

struct RejectionAudit {
    bool pass = false;
    double mean_trials = 0.0;
    double bound = 0.0;  // expected-trials bound for the regime
    std::int64_t n = 0;
};

// Mean observed trials against the regime bound (2, 3, or exp(1/2 + delta))
// with 10% headroom; requires at least 1e4 observations.
RejectionAudit audit_rejections(const std::vector<RgoStats>& stats, RgoRegime regime,
                                double delta);

struct EnvelopeFuzzOptions {
    bool corrupt_h1 = false;      // negative control: offset h1 by +2 delta
    std::size_t points_per_run = 8;
};

// Worst signed violation of h1 <= g^eta <= h2 over randomized legal
// (y, eta, delta, x) draws; <= ~1e-8 for a correct implementation, positive
// under the corrupted control.
double fuzz_envelopes(const RegularizedProblem& p, std::int64_t trials, RngStream& rng,
                      const EnvelopeFuzzOptions& options = {});

struct IntegralBoundReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

// Radial-quadrature check of
//   int exp(-||x||^2/(2 lambda) - 2a||x||) dx >= (2 pi lambda)^{d/2} / 2
// under lambda <= 1/(16 a^2 d).
IntegralBoundReport check_integral_bound(std::size_t d, double a, double lambda);

// int_0^inf exp(-alpha r^2 - beta r) r^n dr by adaptive composite
// Gauss-Legendre, with the upper limit chosen so the discarded tail is below
// 1e-14 of the peak. Exposed for the self-checks against closed forms.
double halfline_integral(double alpha, double beta, int n);

// Surface area of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
double unit_sphere_area(std::size_t d);

// For smooth f: the exact minimizer of g^eta by gradient descent with step
// 1/(L + sigma); independent of the bundle path, used as a fuzzing oracle.
Vec minimize_g_eta_smooth(const RegularizedProblem& p, const Vec& y, double eta,
                          double tol = 1e-13);

}  // namespace proxsamp
