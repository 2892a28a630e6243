#include "proxsamp/asf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "proxsamp/errors.hpp"

namespace proxsamp {

namespace {

constexpr double kWindowSlack = 1.0 + 1e-12;

void check_eps(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
}

}  // namespace

std::int64_t schedule_T(std::size_t d, double eps, double eta, double mu, double c_T) {
    const double em = eta * mu;
    const double t = c_T * (1.0 / em) * std::log(static_cast<double>(d) / (em * eps));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t)));
}

Schedule Schedule::strongly_convex(std::size_t d, double eps, double mu, double M,
                                   std::optional<double> delta_opt, double c_T) {
    check_eps(eps);
    if (mu <= 0.0) throw ConfigError("mu must be positive for the strongly convex schedule");
    if (M <= 0.0) throw ConfigError("M must be positive for the strongly convex schedule");
    const double dd = static_cast<double>(d);
    const double eta = std::min(1.0 / (64.0 * M * M * dd), 1.0 / mu);
    // default: the largest delta the window allows (1/(64 d) when eta sits at
    // its own cap, eta M^2 when eta is pinned by 1/mu)
    const double delta = delta_opt.value_or(std::min(1.0 / (64.0 * dd), eta * M * M));
    if (delta / (M * M) > eta * kWindowSlack) {
        throw ConfigError("infeasible schedule window: delta/M^2 = " +
                          std::to_string(delta / (M * M)) + " exceeds eta = " +
                          std::to_string(eta));
    }
    return Schedule(eta, mu, delta, schedule_T(d, eps, eta, mu, c_T), eps);
}

Schedule Schedule::convex(std::size_t d, double eps, double M, double m4, const Vec& x0,
                          const Vec& x_min, std::optional<double> delta_opt, double c_T) {
    check_eps(eps);
    if (m4 <= 0.0) throw ConfigError("m4 must be positive");
    const double shift = dist2(x0, x_min);
    const double mu = eps / (std::sqrt(2.0) * (std::sqrt(m4) + shift));
    // eps/2 regularization bias is already built into mu; the chain gets the
    // other half of the budget.
    return strongly_convex(d, eps / 2.0, mu, M, delta_opt, c_T);
}

Schedule Schedule::smooth(std::size_t d, double eps, double mu, double L, double delta,
                          double c_T) {
    check_eps(eps);
    if (mu <= 0.0) throw ConfigError("mu must be positive for the smooth schedule");
    if (L <= 0.0) throw ConfigError("L must be positive for the smooth schedule");
    if (delta <= 0.0) throw ConfigError("delta must be positive for the smooth schedule");
    const double eta = std::min(1.0 / (L * static_cast<double>(d)), 1.0 / mu);
    return Schedule(eta, mu, delta, schedule_T(d, eps, eta, mu, c_T), eps);
}

Schedule Schedule::validated(double eta, double mu, double delta, std::int64_t T, double eps,
                             std::size_t d, const Potential& f) {
    check_eps(eps);
    if (eta <= 0.0) throw ConfigError("eta must be positive");
    if (mu < 0.0) throw ConfigError("mu must be nonnegative");
    if (delta < 0.0) throw ConfigError("delta must be nonnegative");
    if (delta == 0.0 && !f.has_prox())
        throw ConfigError("delta = 0 requires a potential with a proximal mapping");
    if (T < 0) throw ConfigError("T must be nonnegative");
    const double dd = static_cast<double>(d);
    const double mu_cap = (mu > 0.0) ? 1.0 / mu : std::numeric_limits<double>::infinity();

    if (f.lipschitz_M) {
        const double M = *f.lipschitz_M;
        const double eta_cap = std::min(M > 0.0 ? 1.0 / (64.0 * M * M * dd)
                                                : std::numeric_limits<double>::infinity(),
                                        mu_cap);
        if (eta > eta_cap * kWindowSlack)
            throw ConfigError("eta violates the window eta <= min{1/(64 M^2 d), 1/mu}");
        if (M > 0.0 && delta / (M * M) > eta * kWindowSlack)
            throw ConfigError("delta violates the window delta <= eta M^2");
        if (M == 0.0 && delta > 0.0)
            throw ConfigError("delta must be 0 when M = 0 (window delta <= eta M^2)");
    } else if (f.smooth_L) {
        const double L = *f.smooth_L;
        const double eta_cap =
            std::min(L > 0.0 ? 1.0 / (L * dd) : std::numeric_limits<double>::infinity(), mu_cap);
        if (eta > eta_cap * kWindowSlack)
            throw ConfigError("eta violates the smooth window eta <= min{1/(L d), 1/mu}");
    } else {
        throw ConfigError("potential declares neither lipschitz_M nor smooth_L");
    }
    return Schedule(eta, mu, delta, T, eps);
}

RgoPath dispatch_path(const Potential& f, std::size_t d, const RgoParams& params) {
    if (f.has_prox()) return RgoPath::exact;
    if (f.smooth_L) {
        const double L = *f.smooth_L;
        if (L == 0.0 || params.eta_mu <= 1.0 / (L * static_cast<double>(d)) * kWindowSlack)
            return RgoPath::smooth;
    }
    if (f.lipschitz_M) return RgoPath::bundle;
    throw ConfigError("no RGO path applies: potential needs a prox, smooth_L, or lipschitz_M");
}

StepResult asf_step(const RegularizedProblem& p, const Vec& x, const Schedule& sched,
                    RngStream& step_rng, const BundleOptions& options) {
    const RgoParams params = RgoParams::for_problem(sched.eta(), sched.delta(), p);
    const Vec z = step_rng.normal_vec(p.dim());
    const Vec y = add_scaled(x, std::sqrt(sched.eta()), z);

    RngStream rgo_rng = step_rng.substream(1);
    RgoOutcome outcome;
    switch (dispatch_path(p.f, p.dim(), params)) {
        case RgoPath::exact:
            outcome = rgo_exact(p, y, params, rgo_rng);
            break;
        case RgoPath::smooth:
            outcome = rgo_smooth(p, y, params, rgo_rng, options);
            break;
        case RgoPath::bundle:
            outcome = rgo_bundle(p, y, params, rgo_rng, options);
            break;
    }
    return {std::move(outcome.sample), {outcome.rejections, outcome.bundle_iterations}};
}

namespace {

// Prox-point residual certificate: at an exact prox step x+ from y,
// (y - x+)/eta is a subgradient of g at x+, and strong convexity gives
// ||x+ - x_opt|| <= ||(y - x+)/eta|| / mu.
InitReport init_by_prox(const RegularizedProblem& p, double d_over_mu) {
    const double eta_pp = 1.0 / p.mu;
    const RgoParams params = RgoParams::for_problem(eta_pp, 0.0, p);
    InitReport report;
    report.bound = d_over_mu;
    Vec x = p.x0;
    for (int it = 0; it < 200; ++it) {
        Vec x_next = rgo_prox_center(p, x, params);
        const double moved2 = dist2(x, x_next);
        if (moved2 > 1e-28 * (1.0 + nrm2sq(x))) ++report.outer_steps;
        const double cert2 = moved2 / (eta_pp * eta_pp) / (p.mu * p.mu);
        x = std::move(x_next);
        if (cert2 <= d_over_mu) {
            report.x = std::move(x);
            report.certificate2 = cert2;
            return report;
        }
    }
    throw SolverCapError("init_at_minimizer: prox-point iteration failed to certify", 0.0);
}

// Bundle variant. The model subgradient v = -mu(x_j - x0) - (x_j - y)/eta is
// an eps0-subgradient of f at x_tilde with computable
//   eps0 = f(x_tilde) - f_j(x_j) - <v, x_tilde - x_j>,
// so xi = v + mu(x_tilde - x0) is an eps0-subgradient of g there and
//   ||x_tilde - x_opt|| <= (||xi|| + sqrt(||xi||^2 + 2 mu eps0)) / mu.
InitReport init_by_bundle(const RegularizedProblem& p, double d_over_mu,
                          const BundleOptions& options) {
    const double eta_pp = 1.0 / p.mu;
    const double dd = static_cast<double>(p.dim());
    double delta_pp = dd / 64.0;
    if (p.f.lipschitz_M && *p.f.lipschitz_M > 0.0) {
        const double M = *p.f.lipschitz_M;
        delta_pp = std::min(delta_pp, dd * dd * p.mu / (64.0 * M * M));
    }

    InitReport report;
    report.bound = d_over_mu;
    Vec x = p.x0;
    double last_cert2 = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        const BundleResult br = run_pbs(p, x, eta_pp, delta_pp, options);

        Vec v(p.dim(), 0.0);
        axpy(-p.mu, br.x_j, v);
        axpy(p.mu, p.x0, v);
        axpy(-1.0 / eta_pp, br.x_j, v);
        axpy(1.0 / eta_pp, x, v);

        const double f_model_xj = br.model_min_value - 0.5 * p.mu * dist2(br.x_j, p.x0) -
                                  dist2(br.x_j, x) / (2.0 * eta_pp);
        const Vec diff = scale_diff(1.0, br.x_tilde, br.x_j);
        const double eps0 =
            std::max(0.0, p.f.eval(br.x_tilde) - f_model_xj - dot(v, diff));

        Vec xi = v;
        axpy(p.mu, br.x_tilde, xi);
        axpy(-p.mu, p.x0, xi);
        const double xi_norm = nrm2(xi);
        const double cert =
            (xi_norm + std::sqrt(xi_norm * xi_norm + 2.0 * p.mu * eps0)) / p.mu;
        last_cert2 = cert * cert;
        if (dist2(x, br.x_tilde) > 1e-28 * (1.0 + nrm2sq(x))) ++report.outer_steps;
        x = br.x_tilde;
        if (last_cert2 <= d_over_mu) {
            report.x = std::move(x);
            report.certificate2 = last_cert2;
            return report;
        }
    }
    throw SolverCapError("init_at_minimizer: bundle prox-point iteration failed to certify",
                         last_cert2);
}

}  // namespace

InitReport init_at_minimizer_report(const RegularizedProblem& p, const Schedule& sched,
                                    const BundleOptions& options) {
    if (p.mu <= 0.0) throw ConfigError("init_at_minimizer requires mu > 0");
    if (p.mu != sched.mu()) throw ConfigError("schedule mu disagrees with the problem mu");
    const double d_over_mu = static_cast<double>(p.dim()) / p.mu;
    if (p.f.has_prox()) return init_by_prox(p, d_over_mu);
    return init_by_bundle(p, d_over_mu, options);
}

Vec init_at_minimizer(const RegularizedProblem& p, const Schedule& sched,
                      const BundleOptions& options) {
    return init_at_minimizer_report(p, sched, options).x;
}

ChainReport run_chain(const RegularizedProblem& p, const Schedule& sched,
                      std::int64_t n_samples, RngStream& chain_rng, std::int64_t thinning,
                      const BundleOptions& options) {
    if (n_samples < 0) throw ConfigError("n_samples must be nonnegative");
    if (thinning < 1) throw ConfigError("thinning stride must be >= 1");
    if (p.mu != sched.mu()) throw ConfigError("schedule mu disagrees with the problem mu");

    ChainReport report(sched);
    report.init_point = (p.mu > 0.0) ? init_at_minimizer(p, sched, options) : p.x0;
    report.burnin_steps = sched.T();
    report.samples.reserve(static_cast<std::size_t>(n_samples));
    report.rgo_stats.reserve(static_cast<std::size_t>(n_samples));

    Vec x = report.init_point;
    std::int64_t t = 0;
    auto advance = [&]() {
        RngStream step_rng = chain_rng.substream(static_cast<std::uint64_t>(t));
        StepResult step = asf_step(p, x, sched, step_rng, options);
        ++t;
        x = std::move(step.x);
        report.totals.rejections += step.stats.rejections;
        report.totals.bundle_iterations += step.stats.bundle_iterations;
        return step.stats;
    };

    for (std::int64_t i = 0; i < sched.T(); ++i) advance();
    for (std::int64_t i = 0; i < n_samples; ++i) {
        RgoStats last{};
        for (std::int64_t s = 0; s < thinning; ++s) last = advance();
        report.samples.push_back(x);
        report.rgo_stats.push_back(last);
    }
    report.total_outer_steps = t;
    return report;
}

}  // namespace proxsamp
