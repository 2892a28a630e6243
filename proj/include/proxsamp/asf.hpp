// Alternating sampling framework: the outer Gibbs loop (Gaussian step + RGO
// step), the parameter schedules, and chain initialization at a certified
// approximate minimizer of g.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "proxsamp/bundle.hpp"
#include "proxsamp/potential.hpp"
#include "proxsamp/rgo.hpp"
#include "proxsamp/rng.hpp"

namespace proxsamp {

// Validated (eta, mu, delta, T, eps) bundle. Only the factories below can
// construct one, so a Schedule in hand always satisfies the stepsize window
// for its potential: delta/M^2 <= eta <= min{1/(64 M^2 d), 1/mu} in the
// Lipschitz case, eta <= min{1/(L d), 1/mu} in the smooth case.
class Schedule {
  public:
    double eta() const { return eta_; }
    double mu() const { return mu_; }
    double delta() const { return delta_; }
    std::int64_t T() const { return T_; }
    double epsilon() const { return epsilon_; }

    // Strongly convex target g = f + (mu/2)||.-x0||^2: largest legal eta and
    // (by default) delta = 1/(64 d); T = ceil(c_T * (1/(eta mu)) * log(d/(eta mu eps))).
    static Schedule strongly_convex(std::size_t d, double eps, double mu, double M,
                                    std::optional<double> delta_opt = {}, double c_T = 2.0);

    // Convex-only target: picks mu = eps / (sqrt(2) (sqrt(m4) + ||x0 - x_min||^2)),
    // then delegates to strongly_convex with the remaining eps/2 error budget.
    static Schedule convex(std::size_t d, double eps, double M, double m4, const Vec& x0,
                           const Vec& x_min, std::optional<double> delta_opt = {},
                           double c_T = 2.0);

    // Smooth target: eta = min{1/(L d), 1/mu}.
    static Schedule smooth(std::size_t d, double eps, double mu, double L,
                           double delta = 1e-6, double c_T = 2.0);

    // Manual parameters, window-checked against the potential's capabilities.
    static Schedule validated(double eta, double mu, double delta, std::int64_t T, double eps,
                              std::size_t d, const Potential& f);

  private:
    Schedule(double eta, double mu, double delta, std::int64_t T, double eps)
        : eta_(eta), mu_(mu), delta_(delta), T_(T), epsilon_(eps) {}

    double eta_, mu_, delta_;
    std::int64_t T_;
    double epsilon_;
};

std::int64_t schedule_T(std::size_t d, double eps, double eta, double mu, double c_T);

struct RgoStats {
    std::int64_t rejections = 0;
    std::int64_t bundle_iterations = 0;
};

enum class RgoPath { exact, bundle, smooth };

// prox when available, else the smooth path inside its validity window, else
// the bundle path. Total: exactly one path per (capability, schedule) pair.
RgoPath dispatch_path(const Potential& f, std::size_t d, const RgoParams& params);

struct StepResult {
    Vec x;
    RgoStats stats;
};

// One outer iteration: y = x + sqrt(eta) Z, then x' ~ exp(-g^eta(.; y)).
// The RGO draws from its own substream of step_rng, so rejection retries
// never shift later consumers.
StepResult asf_step(const RegularizedProblem& p, const Vec& x, const Schedule& sched,
                    RngStream& step_rng, const BundleOptions& options = {});

struct InitReport {
    Vec x;
    int outer_steps = 0;      // proximal-point steps that actually moved x
    double certificate2 = 0;  // certified ||x - x_opt||^2 bound at return
    double bound = 0;         // d/mu
};

// Approximate minimizer of g with the certificate ||x - x_opt||^2 <= d/mu,
// obtained by proximal-point iterations (exact prox when available, bundle
// solves otherwise). Requires mu > 0.
InitReport init_at_minimizer_report(const RegularizedProblem& p, const Schedule& sched,
                                    const BundleOptions& options = {});
Vec init_at_minimizer(const RegularizedProblem& p, const Schedule& sched,
                      const BundleOptions& options = {});

struct ChainReport {
    explicit ChainReport(Schedule sched) : schedule(sched) {}

    std::vector<Vec> samples;           // emitted states, one per thinning stride
    std::vector<RgoStats> rgo_stats;    // stats of the step that produced each sample
    Schedule schedule;
    Vec init_point;
    std::int64_t burnin_steps = 0;
    std::int64_t total_outer_steps = 0;
    RgoStats totals;                    // aggregated over every outer step
};

// Burn-in for sched.T() steps from the certified minimizer (from x0 when
// mu = 0), then emit n_samples states, one every `thinning` outer steps.
ChainReport run_chain(const RegularizedProblem& p, const Schedule& sched,
                      std::int64_t n_samples, RngStream& chain_rng, std::int64_t thinning = 1,
                      const BundleOptions& options = {});

}  // namespace proxsamp
