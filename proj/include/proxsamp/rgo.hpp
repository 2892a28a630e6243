// Restricted Gaussian oracle: draws X with density proportional to
// exp(-g^eta) by rejection sampling from a Gaussian proposal centered at an
// (approximate) minimizer of g^eta. Three entry points share the mechanism
// and differ in how the center is produced and which efficiency regime they
// target: rgo_exact (proximal mapping), rgo_bundle (proximal bundle method),
// rgo_smooth (bundle on gradient cuts, validity window eta_mu <= 1/(L d)).
//
// Acceptance is decided entirely in the log domain: accept X when
// log U <= h1(X) - g^eta(X), with h1 the quadratic lower envelope. The upper
// envelope h2 never enters the loop; it exists for verification only.

#pragma once

#include <cstdint>
#include <utility>

#include "proxsamp/bundle.hpp"
#include "proxsamp/potential.hpp"
#include "proxsamp/rng.hpp"
#include "proxsamp/vec.hpp"

namespace proxsamp {

// offset + (inv_width/2)||x - center||^2 + linear_coeff*||x - center||
struct Envelope {
    Vec center;
    double inv_width = 0.0;
    double linear_coeff = 0.0;
    double offset = 0.0;

    double operator()(const Vec& x) const {
        const double d2 = dist2(x, center);
        return offset + 0.5 * inv_width * d2 + linear_coeff * std::sqrt(d2);
    }
};

struct RgoOutcome {
    Vec sample;
    std::int64_t rejections = 0;    // proposals drawn minus one
    int bundle_iterations = 0;      // 0 on the prox path
    Vec center;                     // proposal center (x* or x_j)
    double incumbent_value = 0.0;   // g^eta(x*) or g^eta(x_tilde)
};

inline constexpr std::int64_t kRejectionCap = 10000;

RgoOutcome rgo_exact(const RegularizedProblem& p, const Vec& y, const RgoParams& params,
                     RngStream& rng);

RgoOutcome rgo_bundle(const RegularizedProblem& p, const Vec& y, const RgoParams& params,
                      RngStream& rng, const BundleOptions& options = {});

RgoOutcome rgo_smooth(const RegularizedProblem& p, const Vec& y, const RgoParams& params,
                      RngStream& rng, const BundleOptions& options = {});

enum class EnvelopeKind { auto_detect, nonsmooth, smooth };

// Both envelopes for a bundle output (pass a synthesized result with
// x_j = x_tilde = x* and delta = 0 for the prox path). The non-smooth h2 uses
// linear coefficient 2M + sqrt(2 delta / eta_mu); the smooth h2 is the
// 1/eta_{mu,L} quadratic at the (near-)exact minimizer.
std::pair<Envelope, Envelope> envelopes(const RegularizedProblem& p, const Vec& y,
                                        const RgoParams& params, const BundleResult& bundle,
                                        EnvelopeKind kind = EnvelopeKind::auto_detect);

// The exact-prox center: x* = prox_f(eta_mu*(mu*x0 + y/eta), eta_mu).
Vec rgo_prox_center(const RegularizedProblem& p, const Vec& y, const RgoParams& params);

// A BundleResult standing in for an exactly solved subproblem at x*.
BundleResult synthesize_exact_result(const RegularizedProblem& p, const Vec& y,
                                     const RgoParams& params, const Vec& x_star);

}  // namespace proxsamp
