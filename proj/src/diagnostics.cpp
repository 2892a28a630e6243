#include "proxsamp/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "proxsamp/errors.hpp"

namespace proxsamp {

namespace {

// ---------------------------------------------------------------------------
// 1D quadrature support

// g - min(g) must reach this level on both sides before the grid is cut off;
// exp(-60) ~ 9e-27 leaves the truncated tail far below the refinement target.
constexpr double kLogTailDrop = 60.0;

double eval_g_1d(const RegularizedProblem& p, double x) {
    Vec v{x};
    return eval_g(p, v);
}

// Bracket and golden-section the minimizer of the convex 1D function g.
double minimize_convex_1d(const RegularizedProblem& p) {
    const double start = p.x0.empty() ? 0.0 : p.x0[0];
    double a = start - 1.0, b = start + 1.0;
    double ga = eval_g_1d(p, a), gb = eval_g_1d(p, b);
    double gm = eval_g_1d(p, start);
    if (ga >= gm && gb >= gm) {
        // min already bracketed by [a, b]
    } else {
        double dir = (ga < gm) ? -1.0 : 1.0;
        double step = 2.0;
        double prev = start, cur = start + dir;
        double gcur = (dir < 0) ? ga : gb;
        for (;;) {
            const double next = cur + dir * step;
            const double gnext = eval_g_1d(p, next);
            if (gnext >= gcur) {
                a = std::min(prev, next);
                b = std::max(prev, next);
                break;
            }
            prev = cur;
            cur = next;
            gcur = gnext;
            step *= 2.0;
            if (std::abs(cur) > 1e12)
                throw ConfigError("exact_cdf_1d: target potential appears unbounded below");
        }
    }
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double g1 = eval_g_1d(p, x1), g2 = eval_g_1d(p, x2);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (g1 <= g2) {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - phi * (b - a);
            g1 = eval_g_1d(p, x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + phi * (b - a);
            g2 = eval_g_1d(p, x2);
        }
    }
    return 0.5 * (a + b);
}

double find_tail(const RegularizedProblem& p, double xm, double gm, double direction) {
    double t = 1.0;
    while (eval_g_1d(p, xm + direction * t) - gm < kLogTailDrop) {
        t *= 2.0;
        if (t > 1e12)
            throw ConfigError("exact_cdf_1d: target density is not integrable in this direction");
    }
    double lo = t / 2.0, hi = t;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (eval_g_1d(p, xm + direction * mid) - gm < kLogTailDrop)
            lo = mid;
        else
            hi = mid;
    }
    return xm + direction * hi;
}

struct GridPass {
    std::vector<double> grid;
    std::vector<double> weight;  // exp(-(g - gm))
    std::vector<double> cdf;     // unnormalized trapezoid partial sums
    double mass = 0.0;
};

GridPass build_grid(const RegularizedProblem& p, double left, double right, double gm,
                    std::size_t n) {
    GridPass out;
    out.grid.resize(n);
    out.weight.resize(n);
    out.cdf.resize(n);
    const double h = (right - left) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        out.grid[i] = left + h * static_cast<double>(i);
        out.weight[i] = std::exp(-(eval_g_1d(p, out.grid[i]) - gm));
    }
    out.cdf[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        out.cdf[i] = out.cdf[i - 1] + 0.5 * h * (out.weight[i] + out.weight[i - 1]);
    }
    out.mass = out.cdf[n - 1];
    return out;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre panels for the radial integrals

struct GaussRule {
    std::array<double, 32> node;
    std::array<double, 32> weight;
};

const GaussRule& gauss32() {
    static const GaussRule rule = [] {
        GaussRule r;
        constexpr int k = 32;
        for (int i = 0; i < k; ++i) {
            double x = std::cos(3.14159265358979323846 * (i + 0.75) / (k + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int j = 2; j <= k; ++j) {
                    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                    p0 = p1;
                    p1 = p2;
                }
                dp = k * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            r.node[i] = x;
            r.weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }();
    return rule;
}

double panel_integral(double alpha, double beta, int n, double log_peak, double lo, double hi) {
    const GaussRule& rule = gauss32();
    const double c = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
    double acc = 0.0;
    for (int i = 0; i < 32; ++i) {
        const double r = c + half * rule.node[i];
        if (r <= 0.0) continue;
        const double logf = n * std::log(r) - alpha * r * r - beta * r - log_peak;
        acc += rule.weight[i] * std::exp(logf);
    }
    return acc * half;
}

}  // namespace

double halfline_integral(double alpha, double beta, int n) {
    if (alpha <= 0.0) throw ConfigError("halfline_integral: alpha must be positive");
    if (n < 0) throw ConfigError("halfline_integral: n must be nonnegative");

    const double nn = static_cast<double>(n);
    const double r_peak =
        (n == 0) ? 0.0 : (-beta + std::sqrt(beta * beta + 8.0 * alpha * nn)) / (4.0 * alpha);
    const double log_peak =
        (n == 0) ? 0.0 : nn * std::log(r_peak) - alpha * r_peak * r_peak - beta * r_peak;

    // upper cutoff: integrand below exp(-40) of the peak
    double upper = r_peak + std::max(1.0 / std::sqrt(alpha), r_peak);
    auto log_f = [&](double r) { return nn * (r > 0.0 ? std::log(r) : -1e300) -
                                        alpha * r * r - beta * r; };
    while (log_f(upper) > log_peak - 40.0) upper *= 2.0;

    double prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t panels = 8; panels <= 8192; panels *= 2) {
        double total = 0.0;
        const double h = upper / static_cast<double>(panels);
        for (std::size_t i = 0; i < panels; ++i) {
            total += panel_integral(alpha, beta, n, log_peak, i * h, (i + 1) * h);
        }
        if (!std::isnan(prev) && std::abs(total - prev) <= 1e-13 * std::abs(total)) {
            return total * std::exp(log_peak);
        }
        prev = total;
    }
    return prev * std::exp(log_peak);
}

double unit_sphere_area(std::size_t d) {
    const double dd = static_cast<double>(d);
    return 2.0 * std::exp(0.5 * dd * std::log(3.14159265358979323846) - std::lgamma(0.5 * dd));
}

IntegralBoundReport check_integral_bound(std::size_t d, double a, double lambda) {
    if (d < 1) throw ConfigError("check_integral_bound: d must be >= 1");
    if (lambda <= 0.0) throw ConfigError("check_integral_bound: lambda must be positive");
    if (a < 0.0) throw ConfigError("check_integral_bound: a must be nonnegative");
    if (a > 0.0 && lambda > (1.0 + 1e-12) / (16.0 * a * a * static_cast<double>(d)))
        throw ConfigError("check_integral_bound: requires lambda <= 1/(16 a^2 d)");

    IntegralBoundReport report;
    report.lhs = unit_sphere_area(d) *
                 halfline_integral(1.0 / (2.0 * lambda), 2.0 * a, static_cast<int>(d) - 1);
    report.rhs =
        0.5 * std::pow(2.0 * 3.14159265358979323846 * lambda, 0.5 * static_cast<double>(d));
    report.pass = report.lhs >= report.rhs * (1.0 - 1e-6);
    return report;
}

QuadratureDensity exact_cdf_1d(const RegularizedProblem& p, std::size_t resolution) {
    if (p.dim() != 1) throw ConfigError("exact_cdf_1d: only 1D targets are supported");
    if (resolution < 9) resolution = 9;

    const double xm = minimize_convex_1d(p);
    const double gm = eval_g_1d(p, xm);
    const double right = find_tail(p, xm, gm, +1.0);
    const double left = find_tail(p, xm, gm, -1.0);

    std::size_t n = resolution | 1;  // odd so refinement shares points
    GridPass pass = build_grid(p, left, right, gm, n);
    for (; n < (std::size_t{1} << 22);) {
        const std::size_t n2 = 2 * n - 1;
        GridPass fine = build_grid(p, left, right, gm, n2);
        double max_cdf_diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            max_cdf_diff = std::max(
                max_cdf_diff, std::abs(pass.cdf[i] / pass.mass - fine.cdf[2 * i] / fine.mass));
        }
        const double mass_diff = std::abs(fine.mass - pass.mass) / fine.mass;
        pass = std::move(fine);
        n = n2;
        if (max_cdf_diff <= 3e-9 && mass_diff <= 1e-10) break;
    }

    QuadratureDensity q;
    q.grid = std::move(pass.grid);
    q.normalizer = pass.mass;
    q.log_density.resize(n);
    q.cdf.resize(n);
    const double log_z = std::log(pass.mass);
    for (std::size_t i = 0; i < n; ++i) {
        q.log_density[i] = std::log(pass.weight[i]) - log_z;
        q.cdf[i] = pass.cdf[i] / pass.mass;
    }
    q.cdf[n - 1] = 1.0;
    return q;
}

// Within a cell the density is interpolated linearly (consistent with the
// trapezoid sums), so the CDF segment is quadratic in the offset.
double QuadratureDensity::cdf_at(double x) const {
    if (x <= grid.front()) return 0.0;
    if (x >= grid.back()) return 1.0;
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - grid.begin());
    const double h = grid[i] - grid[i - 1];
    const double t = (x - grid[i - 1]) / h;
    const double rho0 = std::exp(log_density[i - 1]);
    const double rho1 = std::exp(log_density[i]);
    return std::min(1.0, cdf[i - 1] + h * (t * rho0 + 0.5 * t * t * (rho1 - rho0)));
}

double QuadratureDensity::inverse_cdf(double u) const {
    if (u <= 0.0) return grid.front();
    if (u >= 1.0) return grid.back();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cdf.begin());
    if (i == 0) return grid.front();
    const double h = grid[i] - grid[i - 1];
    const double rho0 = std::exp(log_density[i - 1]);
    const double rho1 = std::exp(log_density[i]);
    const double target = (u - cdf[i - 1]) / h;
    const double denom = cdf[i] - cdf[i - 1];
    double t = denom > 0.0 ? (u - cdf[i - 1]) / denom : 0.0;
    // Newton polish of t*rho0 + t^2 (rho1-rho0)/2 = target (monotone in t)
    for (int it2 = 0; it2 < 4; ++it2) {
        const double val = t * rho0 + 0.5 * t * t * (rho1 - rho0) - target;
        const double deriv = rho0 + t * (rho1 - rho0);
        if (deriv <= 0.0) break;
        t -= val / deriv;
        t = std::min(1.0, std::max(0.0, t));
    }
    return grid[i - 1] + t * h;
}

double QuadratureDensity::mean() const {
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double h = grid[i] - grid[i - 1];
        acc += 0.5 * h * (grid[i] * std::exp(log_density[i]) +
                          grid[i - 1] * std::exp(log_density[i - 1]));
    }
    return acc;
}

double QuadratureDensity::variance() const {
    const double m = mean();
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double h = grid[i] - grid[i - 1];
        const double a = (grid[i] - m) * (grid[i] - m) * std::exp(log_density[i]);
        const double b = (grid[i - 1] - m) * (grid[i - 1] - m) * std::exp(log_density[i - 1]);
        acc += 0.5 * h * (a + b);
    }
    return acc;
}

KsReport ks_test(std::vector<double> samples, const QuadratureDensity& ref, double threshold) {
    if (samples.empty()) throw ConfigError("ks_test: samples must be nonempty");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double stat = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = ref.cdf_at(samples[i]);
        stat = std::max(stat, std::max(F - static_cast<double>(i) / n,
                                       static_cast<double>(i + 1) / n - F));
    }
    KsReport report;
    report.statistic = stat;
    report.n = static_cast<std::int64_t>(samples.size());
    report.threshold = threshold;
    report.pass = stat <= threshold;
    return report;
}

RejectionAudit audit_rejections(const std::vector<RgoStats>& stats, RgoRegime regime,
                                double delta) {
    if (stats.size() < 10000)
        throw ConfigError("audit_rejections: needs at least 1e4 observations, got " +
                          std::to_string(stats.size()));
    double total = 0.0;
    for (const RgoStats& s : stats) total += static_cast<double>(s.rejections) + 1.0;

    RejectionAudit audit;
    audit.n = static_cast<std::int64_t>(stats.size());
    audit.mean_trials = total / static_cast<double>(stats.size());
    switch (regime) {
        case RgoRegime::prox:
            audit.bound = 2.0;
            break;
        case RgoRegime::bundle:
            audit.bound = 3.0;
            break;
        case RgoRegime::smooth:
            audit.bound = std::exp(0.5 + delta);
            break;
    }
    audit.pass = audit.mean_trials <= audit.bound * 1.1;
    return audit;
}

Vec minimize_g_eta_smooth(const RegularizedProblem& p, const Vec& y, double eta, double tol) {
    if (!p.f.smooth_L) throw ConfigError("minimize_g_eta_smooth: potential is not smooth");
    const double sigma = p.mu + 1.0 / eta;
    const double step = 1.0 / (*p.f.smooth_L + sigma);
    Vec x = y;
    for (int it = 0; it < 10000; ++it) {
        Vec grad = p.f.subgrad(x);
        axpy(p.mu, x, grad);
        axpy(-p.mu, p.x0, grad);
        axpy(1.0 / eta, x, grad);
        axpy(-1.0 / eta, y, grad);
        const double gn = nrm2(grad);
        axpy(-step, grad, x);
        if (gn <= tol * sigma * (1.0 + nrm2(x))) return x;
    }
    throw SolverCapError("minimize_g_eta_smooth: gradient descent failed to converge", 0.0);
}

double fuzz_envelopes(const RegularizedProblem& p, std::int64_t trials, RngStream& rng,
                      const EnvelopeFuzzOptions& options) {
    const std::size_t d = p.dim();
    const double dd = static_cast<double>(d);
    const double mu_cap = p.mu > 0.0 ? 1.0 / p.mu : std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();

    auto check_pair = [&](const Envelope& h1, const Envelope* h2, const RgoParams& params,
                          const Vec& y, const Vec& center, const Vec& incumbent) {
        Envelope h1_used = h1;
        if (options.corrupt_h1) {
            h1_used.offset += (params.delta > 0.0) ? 2.0 * params.delta : 1e-3;
        }
        const double width = std::sqrt(params.eta_mu);
        for (std::size_t k = 0; k < options.points_per_run + 2; ++k) {
            Vec x;
            if (k == 0) {
                x = center;
            } else if (k == 1) {
                x = incumbent;
            } else {
                const double scale = (k % 3 == 0) ? 3.0 : ((k % 3 == 1) ? 1.0 : 0.3);
                x = add_scaled(center, width * scale, rng.normal_vec(d));
            }
            const double g = eval_g_eta(p, y, params.eta, x);
            worst = std::max(worst, h1_used(x) - g);
            if (h2 != nullptr) worst = std::max(worst, g - (*h2)(x));
        }
    };

    for (std::int64_t trial = 0; trial < trials; ++trial) {
        Vec y = add_scaled(p.x0, 2.0, rng.normal_vec(d));

        const double M = p.f.lipschitz_M.value_or(0.0);
        const double L = p.f.smooth_L.value_or(0.0);
        double eta_cap;
        if (p.f.lipschitz_M && M > 0.0) {
            eta_cap = std::min(1.0 / (64.0 * M * M * dd), mu_cap);
        } else if (p.f.smooth_L && L > 0.0) {
            eta_cap = std::min(1.0 / (L * dd), mu_cap);
        } else {
            eta_cap = std::min(1.0, mu_cap);
        }
        const double eta = eta_cap * (0.05 + 0.95 * rng.uniform());

        if (p.f.has_prox()) {
            // exact-center regime: prox available, delta = 0
            const RgoParams params = RgoParams::for_problem(eta, 0.0, p);
            const Vec x_star = rgo_prox_center(p, y, params);
            const BundleResult exact = synthesize_exact_result(p, y, params, x_star);
            if (p.f.lipschitz_M) {
                auto [h1, h2] = envelopes(p, y, params, exact, EnvelopeKind::nonsmooth);
                check_pair(h1, &h2, params, y, exact.x_j, exact.x_tilde);
            }
            if (p.f.smooth_L && params.eta_mu_L) {
                auto [h1, h2] = envelopes(p, y, params, exact, EnvelopeKind::smooth);
                check_pair(h1, &h2, params, y, exact.x_j, exact.x_tilde);
            }
        }
        if (p.f.lipschitz_M && M > 0.0) {
            // bundle regime: delta in (0, eta M^2]
            const double delta = eta * M * M * (0.01 + 0.99 * rng.uniform());
            const RgoParams params = RgoParams::for_problem(eta, delta, p);
            const BundleResult br = run_pbs(p, y, eta, delta);
            auto [h1, h2] = envelopes(p, y, params, br, EnvelopeKind::nonsmooth);
            check_pair(h1, &h2, params, y, br.x_j, br.x_tilde);
        } else if (p.f.smooth_L && L > 0.0 && !p.f.has_prox()) {
            // smooth regime: h2 needs the exact minimizer; h1 also checked on
            // a genuine bundle output at small delta.
            const RgoParams params0 = RgoParams::for_problem(eta, 0.0, p);
            const Vec x_star = minimize_g_eta_smooth(p, y, eta);
            const BundleResult exact = synthesize_exact_result(p, y, params0, x_star);
            auto [h1, h2] = envelopes(p, y, params0, exact, EnvelopeKind::smooth);
            check_pair(h1, &h2, params0, y, exact.x_j, exact.x_tilde);

            const double delta = 1e-6;
            const RgoParams params = RgoParams::for_problem(eta, delta, p);
            const BundleResult br = run_pbs(p, y, eta, delta);
            auto [h1b, h2b] = envelopes(p, y, params, br, EnvelopeKind::smooth);
            (void)h2b;
            check_pair(h1b, nullptr, params, y, br.x_j, br.x_tilde);
        }
    }
    return worst;
}

}  // namespace proxsamp
