#include <doctest.h>

#include <cmath>

#include "proxsamp/diagnostics.hpp"
#include "proxsamp/errors.hpp"
#include "proxsamp/rgo.hpp"
#include "test_support.hpp"

using namespace proxsamp;
using proxsamp::testing::random_point;

TEST_CASE("rgo_exact: zero potential always accepts") {
    RegularizedProblem p{make_zero(), 1.0, Vec{0.0, 0.0}};
    const RgoParams params = RgoParams::for_problem(0.5, 0.0, p);
    RngStream rng(8);
    for (int i = 0; i < 200; ++i) {
        RngStream call = rng.substream(static_cast<std::uint64_t>(i));
        const RgoOutcome out = rgo_exact(p, Vec{1.0, -2.0}, params, call);
        CHECK(out.rejections == 0);
        CHECK(out.bundle_iterations == 0);
    }
}

TEST_CASE("rgo_bundle: zero potential (forced bundle path) accepts immediately") {
    Potential flat = make_zero();
    flat.prox = nullptr;  // force the PBS route
    RegularizedProblem p{flat, 1.0, Vec{0.0}};
    const RgoParams params = RgoParams::for_problem(0.5, 1e-12, p);
    RngStream rng(9);
    for (int i = 0; i < 100; ++i) {
        RngStream call = rng.substream(static_cast<std::uint64_t>(i));
        const RgoOutcome out = rgo_bundle(p, Vec{2.0}, params, call);
        CHECK(out.rejections == 0);
        CHECK(out.bundle_iterations == 1);
    }
}

TEST_CASE("rgo_exact: proposal center is the soft-threshold point") {
    RegularizedProblem p{make_l1(1.0, 1), 0.0, Vec{0.0}};
    const RgoParams params = RgoParams::for_problem(1.0, 0.0, p);
    RngStream rng(10);
    const RgoOutcome out = rgo_exact(p, Vec{3.0}, params, rng);
    CHECK(out.center[0] == doctest::Approx(2.0));
    CHECK(out.incumbent_value == doctest::Approx(eval_g_eta(p, Vec{3.0}, 1.0, Vec{2.0})));
}

TEST_CASE("rgo_exact: efficient prox regime keeps mean rejections at most 1.1") {
    RegularizedProblem p{make_l1(1.0, 1), 0.0, Vec{0.0}};
    const RgoParams params = RgoParams::for_problem(1.0 / 16.0, 0.0, p);
    RngStream rng(11);
    const int n = 10000;
    std::int64_t rejections = 0;
    for (int i = 0; i < n; ++i) {
        RngStream call = rng.substream(static_cast<std::uint64_t>(i));
        const Vec y = random_point(call, 1, 2.0);
        RngStream draw = call.substream(1);
        rejections += rgo_exact(p, y, params, draw).rejections;
    }
    CHECK(static_cast<double>(rejections) / n <= 1.1);
}

TEST_CASE("rgo_bundle: tight stepsize window keeps mean trials at most 3") {
    RegularizedProblem p{make_l1(1.0, 1), 0.1, Vec{0.0}};
    // eta_mu at the 1/(64 M^2 d) boundary, delta at the 1/(32 d) boundary
    const double em = 1.0 / 64.0;
    const double eta = em / (1.0 - em * p.mu);
    const RgoParams params = RgoParams::for_problem(eta, 1.0 / 32.0, p);
    REQUIRE(params.eta_mu <= 1.0 / 64.0 + 1e-15);
    RngStream rng(12);
    const int n = 10000;
    std::int64_t trials = 0;
    for (int i = 0; i < n; ++i) {
        RngStream call = rng.substream(static_cast<std::uint64_t>(i));
        const Vec y = random_point(call, 1, 2.0);
        RngStream draw = call.substream(1);
        trials += rgo_bundle(p, y, params, draw).rejections + 1;
    }
    CHECK(static_cast<double>(trials) / n <= 3.0);
}

TEST_CASE("rgo_bundle: log acceptance ratio at the proposal center is nonpositive") {
    RegularizedProblem p{make_l1(1.0, 1), 0.2, Vec{0.3}};
    RngStream rng(13);
    for (int i = 0; i < 50; ++i) {
        const Vec y = random_point(rng, 1, 2.0);
        const double eta = 1.0 / 64.0 * (0.2 + 0.8 * rng.uniform());
        const double delta = eta * (0.1 + 0.9 * rng.uniform());
        const BundleResult br = run_pbs(p, y, eta, delta);
        const double log_ratio = (br.g_eta_incumbent - delta) - eval_g_eta(p, y, eta, br.x_j);
        CHECK(log_ratio <= 1e-12);
    }
}

TEST_CASE("rgo_smooth: expected trial count in the smooth window") {
    const double L = 2.0;
    RegularizedProblem p{make_quadratic({{L}}), 0.0, Vec{0.0}};
    const double delta = 1e-6;
    const RgoParams params = RgoParams::for_problem(1.0 / L, delta, p);  // eta_mu = 1/(L d)
    RngStream rng(14);
    const int n = 10000;
    std::int64_t trials = 0;
    for (int i = 0; i < n; ++i) {
        RngStream call = rng.substream(static_cast<std::uint64_t>(i));
        const Vec y = random_point(call, 1, 1.5);
        RngStream draw = call.substream(1);
        trials += rgo_smooth(p, y, params, draw).rejections + 1;
    }
    CHECK(static_cast<double>(trials) / n <= 1.1 * std::exp(0.5 + delta));
}

TEST_CASE("rgo_smooth: window precondition enforced") {
    RegularizedProblem p{make_quadratic({{2.0}}), 0.0, Vec{0.0}};
    const RgoParams params = RgoParams::for_problem(2.0, 1e-6, p);  // eta_mu = 2 > 1/(L d)
    RngStream rng(15);
    CHECK_THROWS_AS(rgo_smooth(p, Vec{1.0}, params, rng), ConfigError);
}

TEST_CASE("envelopes: definitions at the centers and the delta = 0 reduction") {
    RegularizedProblem p{make_l1(1.0, 1), 0.3, Vec{0.2}};
    const Vec y{1.7};

    // bundle output at delta > 0
    const double eta = 1.0 / 64.0, delta = 1e-4;
    const RgoParams params = RgoParams::for_problem(eta, delta, p);
    const BundleResult br = run_pbs(p, y, eta, delta);
    const auto [h1, h2] = envelopes(p, y, params, br, EnvelopeKind::nonsmooth);
    CHECK(h1(br.x_j) == doctest::Approx(br.g_eta_incumbent - delta));
    CHECK(h2(br.x_tilde) == doctest::Approx(br.g_eta_incumbent));
    CHECK(h2.linear_coeff ==
          doctest::Approx(2.0 * *p.f.lipschitz_M + std::sqrt(2.0 * delta / params.eta_mu)));

    // exact-prox path: linear coefficient collapses to exactly 2M
    const RgoParams params0 = RgoParams::for_problem(eta, 0.0, p);
    const Vec x_star = rgo_prox_center(p, y, params0);
    const BundleResult exact = synthesize_exact_result(p, y, params0, x_star);
    const auto [h1e, h2e] = envelopes(p, y, params0, exact, EnvelopeKind::nonsmooth);
    CHECK(h2e.linear_coeff == doctest::Approx(2.0 * *p.f.lipschitz_M));
    CHECK(h1e(x_star) == doctest::Approx(eval_g_eta(p, y, eta, x_star)));
    CHECK(h1e.inv_width == doctest::Approx(1.0 / params0.eta_mu));
}

TEST_CASE("envelope sandwich on bundle outputs, non-smooth forms") {
    RngStream rng(16);
    for (const auto& entry : proxsamp::testing::make_corpus()) {
        const RegularizedProblem& p = entry.problem;
        if (!p.f.lipschitz_M || *p.f.lipschitz_M <= 0.0) continue;
        CAPTURE(entry.label);
        const double M = *p.f.lipschitz_M;
        const double dd = static_cast<double>(p.dim());
        for (int trial = 0; trial < 40; ++trial) {
            const double eta_cap =
                std::min(1.0 / (64.0 * M * M * dd), p.mu > 0.0 ? 1.0 / p.mu : 1e100);
            const double eta = eta_cap * (0.1 + 0.9 * rng.uniform());
            const double delta = eta * M * M * (0.05 + 0.9 * rng.uniform());
            const Vec y = random_point(rng, p.dim(), 2.0);
            const RgoParams params = RgoParams::for_problem(eta, delta, p);
            const BundleResult br = run_pbs(p, y, eta, delta);
            const auto [h1, h2] = envelopes(p, y, params, br, EnvelopeKind::nonsmooth);
            for (int k = 0; k < 10; ++k) {
                const Vec x = add_scaled(br.x_j, std::sqrt(params.eta_mu) * 2.0,
                                         random_point(rng, p.dim(), 1.0));
                const double g = eval_g_eta(p, y, params.eta, x);
                CHECK(h1(x) <= g + 1e-8);
                CHECK(g <= h2(x) + 1e-8);
            }
        }
    }
}

TEST_CASE("envelope sandwich, smooth form at the exact center") {
    RegularizedProblem p{make_quadratic({{2.0, 0.3}, {0.3, 1.0}}), 0.15, Vec{0.4, -0.2}};
    RngStream rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const double eta_cap = std::min(1.0 / (*p.f.smooth_L * 2.0), 1.0 / p.mu);
        const double eta = eta_cap * (0.1 + 0.9 * rng.uniform());
        const Vec y = random_point(rng, 2, 2.0);
        const RgoParams params = RgoParams::for_problem(eta, 0.0, p);
        const Vec x_star = minimize_g_eta_smooth(p, y, eta);
        const BundleResult exact = synthesize_exact_result(p, y, params, x_star);
        const auto [h1, h2] = envelopes(p, y, params, exact, EnvelopeKind::smooth);
        for (int k = 0; k < 10; ++k) {
            const Vec x =
                add_scaled(x_star, std::sqrt(params.eta_mu) * 2.0, random_point(rng, 2, 1.0));
            const double g = eval_g_eta(p, y, params.eta, x);
            CHECK(h1(x) <= g + 1e-8);
            CHECK(g <= h2(x) + 1e-8);
        }
    }
}

TEST_CASE("rgo output matches the closed-form Gaussian law for flat potentials") {
    RegularizedProblem p{make_zero(), 0.5, Vec{1.0, -1.0}};
    const double eta = 0.8;
    const RgoParams params = RgoParams::for_problem(eta, 0.0, p);
    const Vec y{0.3, 0.9};

    // exact law: N(eta_mu (mu x0 + y/eta), eta_mu I)
    Vec mean(2, 0.0);
    axpy(p.mu, p.x0, mean);
    axpy(1.0 / eta, y, mean);
    for (double& v : mean) v *= params.eta_mu;

    RngStream rng(18);
    const int n = 20000;
    Vec sum(2, 0.0), sumsq(2, 0.0);
    for (int i = 0; i < n; ++i) {
        RngStream call = rng.substream(static_cast<std::uint64_t>(i));
        const RgoOutcome out = rgo_exact(p, y, params, call);
        for (std::size_t j = 0; j < 2; ++j) {
            sum[j] += out.sample[j];
            sumsq[j] += out.sample[j] * out.sample[j];
        }
    }
    for (std::size_t j = 0; j < 2; ++j) {
        const double m = sum[j] / n;
        const double var = sumsq[j] / n - m * m;
        const double se_mean = std::sqrt(params.eta_mu / n);
        const double se_var = params.eta_mu * std::sqrt(2.0 / n);
        CHECK(std::abs(m - mean[j]) <= 4.0 * se_mean);
        CHECK(std::abs(var - params.eta_mu) <= 4.0 * se_var);
    }
}

TEST_CASE("rgo_bundle draws follow exp(-g^eta) exactly") {
    // For fixed y the restricted density is |x| + (sigma/2)(x - c)^2 up to a
    // constant, which the 1D quadrature oracle can integrate directly.
    RegularizedProblem p{make_l1(1.0, 1), 0.1, Vec{0.0}};
    const double eta = 1.0 / 64.0, delta = 1.0 / 32.0;
    const RgoParams params = RgoParams::for_problem(eta, delta, p);
    const Vec y{0.4};

    const double sigma = p.mu + 1.0 / eta;
    const double center = (y[0] / eta + p.mu * p.x0[0]) / sigma;
    RegularizedProblem conditional{make_l1(1.0, 1), sigma, Vec{center}};
    const QuadratureDensity ref = exact_cdf_1d(conditional);

    RngStream rng(50);
    const int n = 30000;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) {
        RngStream call = rng.substream(static_cast<std::uint64_t>(i));
        draws[i] = rgo_bundle(p, y, params, call).sample[0];
    }
    const KsReport ks = ks_test(std::move(draws), ref, 0.012);
    CHECK(ks.pass);
}

TEST_CASE("rgo_smooth draws match the closed-form Gaussian conditional") {
    // quadratic potential: the restricted density is exactly Gaussian with
    // precision L + mu + 1/eta
    const double L = 2.0, mu = 0.3, eta = 1.0 / (L * 1.0) / (1.0 + 0.0);
    RegularizedProblem p{make_quadratic({{L}}), mu, Vec{0.2}};
    const RgoParams params = RgoParams::for_problem(eta, 1e-6, p);
    const Vec y{0.9};
    const double precision = L + mu + 1.0 / eta;
    const double mean_exact = (y[0] / eta + mu * p.x0[0]) / precision;
    const double var_exact = 1.0 / precision;

    RngStream rng(51);
    const int n = 30000;
    double s = 0.0, q = 0.0;
    for (int i = 0; i < n; ++i) {
        RngStream call = rng.substream(static_cast<std::uint64_t>(i));
        const double x = rgo_smooth(p, y, params, call).sample[0];
        s += x;
        q += x * x;
    }
    const double m = s / n;
    const double v = q / n - m * m;
    CHECK(std::abs(m - mean_exact) <= 4.0 * std::sqrt(var_exact / n));
    CHECK(std::abs(v - var_exact) <= 4.0 * var_exact * std::sqrt(2.0 / n));
}

TEST_CASE("acceptance stays in the log domain for huge offsets") {
    RegularizedProblem p{make_l1(1.0, 1), 0.0, Vec{0.0}};
    const RgoParams params = RgoParams::for_problem(1.0 / 16.0, 0.0, p);
    RngStream rng(19);
    const RgoOutcome out = rgo_exact(p, Vec{1e8}, params, rng);
    CHECK(std::isfinite(out.sample[0]));
    CHECK(out.rejections < 100);
    CHECK(out.center[0] == doctest::Approx(1e8 - 1.0 / 16.0));
}

TEST_CASE("rejection cap produces a diagnostic error") {
    RegularizedProblem p{make_l1(1e8, 1), 0.0, Vec{0.0}};
    const RgoParams params = RgoParams::for_problem(1.0, 0.0, p);  // far outside the efficient window
    RngStream rng(20);
    CHECK_THROWS_AS(rgo_exact(p, Vec{0.0}, params, rng), SolverCapError);
}

TEST_CASE("identical streams reproduce outcomes bit-for-bit") {
    RegularizedProblem p{make_l1(1.0, 1), 0.1, Vec{0.0}};
    const RgoParams params = RgoParams::for_problem(1.0 / 64.0, 1.0 / 32.0, p);
    RngStream a(21), b(21);
    const RgoOutcome oa = rgo_bundle(p, Vec{0.7}, params, a);
    const RgoOutcome ob = rgo_bundle(p, Vec{0.7}, params, b);
    CHECK(oa.sample == ob.sample);
    CHECK(oa.rejections == ob.rejections);
}
