#include "proxsamp/rgo.hpp"

#include <cmath>
#include <string>

#include "proxsamp/errors.hpp"

namespace proxsamp {

namespace {

// Shared rejection loop: proposal X = center + sqrt(eta_mu) Z against the
// lower envelope h1(x) = ||x - center||^2/(2 eta_mu) + h1_offset.
RgoOutcome rejection_sample(const RegularizedProblem& p, const Vec& y, const RgoParams& params,
                            RngStream& rng, Vec center, double h1_offset, double incumbent_value,
                            int bundle_iterations) {
    const double width = std::sqrt(params.eta_mu);
    const std::size_t d = center.size();
    for (std::int64_t trial = 1; trial <= kRejectionCap; ++trial) {
        const Vec z = rng.normal_vec(d);
        const Vec x = add_scaled(center, width, z);
        // h1(X) - g^eta(X); the proposal quadratic is eta_mu/2 * ||z||^2
        const double log_ratio =
            h1_offset + 0.5 * nrm2sq(z) - eval_g_eta(p, y, params.eta, x);
        const double u = rng.uniform();
        if (std::log(u) <= log_ratio) {
            RgoOutcome out;
            out.sample = x;
            out.rejections = trial - 1;
            out.bundle_iterations = bundle_iterations;
            out.center = std::move(center);
            out.incumbent_value = incumbent_value;
            return out;
        }
    }
    const double rate = 1.0 / static_cast<double>(kRejectionCap);
    throw SolverCapError(
        "rejection sampling cap exceeded (empirical acceptance rate < " + std::to_string(rate) +
            "); stepsize parameters are far outside the efficient regime",
        rate);
}

}  // namespace

Vec rgo_prox_center(const RegularizedProblem& p, const Vec& y, const RgoParams& params) {
    // argmin g^eta folds both quadratic terms into one prox call:
    // x* = prox_f(eta_mu*(mu*x0 + y/eta), eta_mu)
    Vec w(p.dim(), 0.0);
    axpy(p.mu, p.x0, w);
    axpy(1.0 / params.eta, y, w);
    for (double& v : w) v *= params.eta_mu;
    return p.f.prox(w, params.eta_mu);
}

RgoOutcome rgo_exact(const RegularizedProblem& p, const Vec& y, const RgoParams& params,
                     RngStream& rng) {
    if (!p.f.has_prox()) throw ConfigError("rgo_exact: potential has no proximal mapping");
    Vec x_star = rgo_prox_center(p, y, params);
    const double g_eta_star = eval_g_eta(p, y, params.eta, x_star);
    // h1 = ||. - x*||^2/(2 eta_mu) + g^eta(x*); acceptance densities cancel to
    // exp(h1(X) - g^eta(X)) with the proposal N(x*, eta_mu I).
    return rejection_sample(p, y, params, rng, std::move(x_star), g_eta_star, g_eta_star, 0);
}

RgoOutcome rgo_bundle(const RegularizedProblem& p, const Vec& y, const RgoParams& params,
                      RngStream& rng, const BundleOptions& options) {
    if (params.delta <= 0.0) {
        if (p.f.has_prox()) return rgo_exact(p, y, params, rng);
        throw ConfigError("rgo_bundle: delta must be positive when no prox is available");
    }
    BundleResult bundle = run_pbs(p, y, params.eta, params.delta, options);
    // h1 = ||. - x_j||^2/(2 eta_mu) + g^eta(x_tilde) - delta
    const double h1_offset = bundle.g_eta_incumbent - params.delta;
    return rejection_sample(p, y, params, rng, std::move(bundle.x_j), h1_offset,
                            bundle.g_eta_incumbent, bundle.iterations);
}

RgoOutcome rgo_smooth(const RegularizedProblem& p, const Vec& y, const RgoParams& params,
                      RngStream& rng, const BundleOptions& options) {
    if (!p.f.smooth_L) throw ConfigError("rgo_smooth: potential declares no smooth_L");
    const double L = *p.f.smooth_L;
    const double d = static_cast<double>(p.dim());
    if (L > 0.0 && params.eta_mu > 1.0 / (L * d) * (1.0 + 1e-12)) {
        throw ConfigError("rgo_smooth: requires eta_mu <= 1/(L*d)");
    }
    if (p.f.has_prox()) return rgo_exact(p, y, params, rng);
    return rgo_bundle(p, y, params, rng, options);
}

BundleResult synthesize_exact_result(const RegularizedProblem& p, const Vec& y,
                                     const RgoParams& params, const Vec& x_star) {
    BundleResult r;
    r.x_j = x_star;
    r.x_tilde = x_star;
    r.iterations = 0;
    r.gap = 0.0;
    r.g_eta_incumbent = eval_g_eta(p, y, params.eta, x_star);
    r.model_min_value = r.g_eta_incumbent;
    return r;
}

std::pair<Envelope, Envelope> envelopes(const RegularizedProblem& p, const Vec& y,
                                        const RgoParams& params, const BundleResult& bundle,
                                        EnvelopeKind kind) {
    if (kind == EnvelopeKind::auto_detect) {
        kind = p.f.smooth_L ? EnvelopeKind::smooth : EnvelopeKind::nonsmooth;
    }

    Envelope h1;
    h1.center = bundle.x_j;
    h1.inv_width = 1.0 / params.eta_mu;
    h1.linear_coeff = 0.0;
    h1.offset = bundle.g_eta_incumbent - params.delta;

    Envelope h2;
    if (kind == EnvelopeKind::smooth) {
        if (!params.eta_mu_L) throw ConfigError("envelopes: smooth form needs eta_mu_L");
        h2.center = bundle.x_j;
        h2.inv_width = 1.0 / *params.eta_mu_L;
        h2.linear_coeff = 0.0;
        h2.offset = eval_g_eta(p, y, params.eta, bundle.x_j);
    } else {
        if (!p.f.lipschitz_M) throw ConfigError("envelopes: non-smooth form needs lipschitz_M");
        h2.center = bundle.x_tilde;
        h2.inv_width = 1.0 / params.eta_mu;
        h2.linear_coeff = 2.0 * *p.f.lipschitz_M + std::sqrt(2.0 * params.delta / params.eta_mu);
        h2.offset = bundle.g_eta_incumbent;
    }
    return {std::move(h1), std::move(h2)};
}

}  // namespace proxsamp
