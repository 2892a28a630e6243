#include "proxsamp/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "proxsamp/diagnostics.hpp"
#include "proxsamp/errors.hpp"
#include "proxsamp/kernels.hpp"

namespace proxsamp {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << content;
}

BundleOptions bundle_options_from(const RunConfig& config, bool trace) {
    BundleOptions options;
    options.cut_policy = config.schedule.cut_policy;
    if (trace) {
        options.trace = [](const BundleTraceRow& row) {
            std::printf("%d\t%zu\t%.17g\t%.17g\n", row.iteration, row.n_cuts, row.gap,
                        row.model_value);
        };
    }
    return options;
}

ordered_json schedule_json(const Schedule& sched, const RunConfig& config) {
    ordered_json j;
    j["eta"] = sched.eta();
    j["mu"] = sched.mu();
    j["delta"] = sched.delta();
    j["T"] = sched.T();
    j["eps"] = sched.epsilon();
    j["thinning"] = config.schedule.thinning;
    j["cut_policy"] = config.schedule.cut_policy == CutPolicy::minimal ? "minimal" : "full";
    return j;
}

// Stepsize with a requested effective variance eta_mu = target; saturates at
// eta = 1/mu when mu makes the target unreachable.
double eta_for_eta_mu(double target_eta_mu, double mu) {
    if (mu > 0.0 && target_eta_mu * mu >= 1.0) return 1.0 / mu;
    return target_eta_mu / (1.0 - target_eta_mu * mu);
}

struct RegimeDraws {
    std::vector<RgoStats> stats;
    double delta = 0.0;
};

RegimeDraws run_rgo_batch(const RegularizedProblem& p, RgoRegime regime, std::int64_t calls,
                          RngStream& rng, const BundleOptions& options) {
    const std::size_t d = p.dim();
    const double dd = static_cast<double>(d);
    const double M = p.f.lipschitz_M.value_or(0.0);
    const double L = p.f.smooth_L.value_or(0.0);

    double target_em, delta;
    switch (regime) {
        case RgoRegime::prox:
            target_em = (M > 0.0) ? 1.0 / (16.0 * M * M * dd) : 1.0;
            delta = 0.0;
            break;
        case RgoRegime::bundle:
            target_em = (M > 0.0) ? 1.0 / (64.0 * M * M * dd) : 1.0;
            delta = 1.0 / (32.0 * dd);
            break;
        case RgoRegime::smooth:
            target_em = (L > 0.0) ? 1.0 / (L * dd) : 1.0;
            delta = 1e-6;
            break;
    }
    const double eta = eta_for_eta_mu(target_em, p.mu);
    const RgoParams params = RgoParams::for_problem(eta, delta, p);

    RegimeDraws out;
    out.delta = delta;
    out.stats.reserve(static_cast<std::size_t>(calls));
    for (std::int64_t i = 0; i < calls; ++i) {
        RngStream call_rng = rng.substream(static_cast<std::uint64_t>(i));
        const Vec y = add_scaled(p.x0, 2.0, call_rng.normal_vec(d));
        RngStream draw_rng = call_rng.substream(1);
        RgoOutcome outcome;
        switch (regime) {
            case RgoRegime::prox:
                outcome = rgo_exact(p, y, params, draw_rng);
                break;
            case RgoRegime::bundle:
                outcome = rgo_bundle(p, y, params, draw_rng, options);
                break;
            case RgoRegime::smooth:
                outcome = rgo_smooth(p, y, params, draw_rng, options);
                break;
        }
        out.stats.push_back({outcome.rejections, outcome.bundle_iterations});
    }
    return out;
}

}  // namespace

int cmd_sample(const RunConfig& config, bool trace) {
    const auto t_start = std::chrono::steady_clock::now();
    const Potential f = build_target(config.target);
    const Schedule sched = resolve_schedule(config, f);
    const RegularizedProblem p{f, sched.mu(), config.target.x0};
    const BundleOptions options = bundle_options_from(config, trace);

    const std::int64_t n_chains = config.chains;
    std::vector<std::int64_t> per_chain(static_cast<std::size_t>(n_chains));
    for (std::int64_t c = 0; c < n_chains; ++c) {
        per_chain[static_cast<std::size_t>(c)] =
            config.n_samples / n_chains + (c < config.n_samples % n_chains ? 1 : 0);
    }

    RngStream root(config.seed);
    std::vector<ChainReport> reports(static_cast<std::size_t>(n_chains), ChainReport(sched));
    auto run_one = [&](std::int64_t c) {
        RngStream chain_rng = root.substream(static_cast<std::uint64_t>(c));
        reports[static_cast<std::size_t>(c)] =
            run_chain(p, sched, per_chain[static_cast<std::size_t>(c)], chain_rng,
                      config.schedule.thinning, options);
    };
    if (n_chains == 1) {
        run_one(0);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(n_chains));
        for (std::int64_t c = 0; c < n_chains; ++c) workers.emplace_back(run_one, c);
        for (std::thread& w : workers) w.join();
    }

    ensure_out_dir(config.out_dir);
    if (config.n_samples > 0) {
        std::string body;
        for (const ChainReport& report : reports) {
            for (const Vec& sample : report.samples) {
                for (std::size_t i = 0; i < sample.size(); ++i) {
                    if (i != 0) body += ",";
                    body += fmt17(sample[i]);
                }
                body += "\n";
            }
        }
        write_file(config.out_dir + "/samples.csv", body);
    }

    std::int64_t total_steps = 0, total_rej = 0, total_bundle = 0;
    ordered_json init_points = ordered_json::array();
    for (const ChainReport& report : reports) {
        total_steps += report.total_outer_steps;
        total_rej += report.totals.rejections;
        total_bundle += report.totals.bundle_iterations;
        init_points.push_back(report.init_point);
    }
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();

    ordered_json summary;
    summary["command"] = "sample";
    summary["target"] = {{"kind", config.target.kind}, {"d", config.target.d}};
    summary["schedule"] = schedule_json(sched, config);
    summary["seed"] = config.seed;
    summary["chains"] = n_chains;
    summary["n_samples"] = config.n_samples;
    summary["init_points"] = init_points;
    summary["burnin_steps_per_chain"] = sched.T();
    summary["total_outer_steps"] = total_steps;
    summary["total_rejections"] = total_rej;
    summary["total_bundle_iterations"] = total_bundle;
    summary["mean_trials_per_step"] =
        total_steps > 0 ? 1.0 + static_cast<double>(total_rej) / static_cast<double>(total_steps)
                        : 0.0;
    summary["kernel_backend"] = kernels::backend_name(kernels::active_backend());
    summary["wall_time_ms"] = wall_ms;
    write_file(config.out_dir + "/summary.json", summary.dump(2) + "\n");
    return 0;
}

int cmd_verify(const RunConfig& config, bool negative_control) {
    const Potential f = build_target(config.target);

    // a schedule is only needed for the KS suite; its absence downgrades that
    // suite to "not applicable"
    std::optional<Schedule> sched;
    std::string sched_error;
    try {
        sched = resolve_schedule(config, f);
    } catch (const ConfigError& e) {
        sched_error = e.what();
    }
    const double mu = sched ? sched->mu() : config.schedule.mu.value_or(0.0);
    const RegularizedProblem p{f, mu, config.target.x0};
    const BundleOptions options = bundle_options_from(config, false);

    ordered_json suites = ordered_json::array();
    bool all_pass = true;
    auto record = [&](const std::string& name, bool applicable, bool pass,
                      const ordered_json& detail) {
        ordered_json entry;
        entry["suite"] = name;
        entry["status"] = applicable ? (pass ? "pass" : "fail") : "not applicable";
        entry["detail"] = detail;
        suites.push_back(entry);
        if (applicable && !pass) all_pass = false;
        std::printf("%-22s %s\n", name.c_str(),
                    applicable ? (pass ? "PASS" : "FAIL") : "SKIP (not applicable)");
    };

    {
        RngStream rng(config.seed ^ 0xE57E10u);
        EnvelopeFuzzOptions fuzz_options;
        fuzz_options.corrupt_h1 = negative_control;
        const double violation = fuzz_envelopes(p, 1500, rng, fuzz_options);
        const bool pass = violation <= 1e-8;
        record("envelopes", true, pass,
               {{"max_violation", violation}, {"trials", 1500},
                {"corrupted", negative_control}});
    }

    {
        const bool applicable = f.has_prox();
        bool pass = true;
        ordered_json detail;
        if (applicable) {
            RngStream rng(config.seed ^ 0x9D0A1u);
            RegimeDraws draws = run_rgo_batch(p, RgoRegime::prox, 10000, rng, options);
            const RejectionAudit audit = audit_rejections(draws.stats, RgoRegime::prox, 0.0);
            pass = audit.pass;
            detail = {{"mean_trials", audit.mean_trials}, {"bound", audit.bound},
                      {"n", audit.n}};
        }
        record("rejections_prox", applicable, pass, detail);
    }

    {
        const bool applicable = f.lipschitz_M && *f.lipschitz_M > 0.0;
        bool pass = true;
        ordered_json detail;
        if (applicable) {
            RngStream rng(config.seed ^ 0xB0D1Eu);
            RegimeDraws draws = run_rgo_batch(p, RgoRegime::bundle, 10000, rng, options);
            const RejectionAudit audit =
                audit_rejections(draws.stats, RgoRegime::bundle, draws.delta);
            pass = audit.pass;
            detail = {{"mean_trials", audit.mean_trials}, {"bound", audit.bound},
                      {"n", audit.n}};
        }
        record("rejections_bundle", applicable, pass, detail);
    }

    {
        const bool applicable = f.smooth_L && *f.smooth_L > 0.0 && !f.has_prox();
        bool pass = true;
        ordered_json detail;
        if (applicable) {
            RngStream rng(config.seed ^ 0x500D7u);
            RegimeDraws draws = run_rgo_batch(p, RgoRegime::smooth, 10000, rng, options);
            const RejectionAudit audit =
                audit_rejections(draws.stats, RgoRegime::smooth, draws.delta);
            pass = audit.pass;
            detail = {{"mean_trials", audit.mean_trials}, {"bound", audit.bound},
                      {"n", audit.n}};
        }
        record("rejections_smooth", applicable, pass, detail);
    }

    {
        bool pass = true;
        double worst_margin = std::numeric_limits<double>::infinity();
        for (std::size_t d = 1; d <= 10; ++d) {
            for (double a : {0.5, 1.0, 4.0}) {
                const double lambda = 1.0 / (16.0 * a * a * static_cast<double>(d));
                const IntegralBoundReport r = check_integral_bound(d, a, lambda);
                pass = pass && r.pass;
                worst_margin = std::min(worst_margin, r.lhs / r.rhs);
            }
            // a = 0 self-check against the closed-form Gaussian integral
            const double lambda = 0.37;
            const IntegralBoundReport r = check_integral_bound(d, 0.0, lambda);
            const double exact = 2.0 * r.rhs;
            if (std::abs(r.lhs - exact) > 1e-9 * exact) pass = false;
        }
        record("integral_bound", true, pass, {{"worst_lhs_over_rhs", worst_margin}});
    }

    {
        bool applicable = config.target.d == 1 && sched.has_value() && sched->mu() > 0.0;
        bool pass = true;
        ordered_json detail;
        if (config.target.d != 1) {
            detail = {{"reason", "KS oracle is 1D-only"}};
        } else if (!sched) {
            detail = {{"reason", std::string("no schedule: ") + sched_error}};
        } else if (applicable) {
            RngStream rng(config.seed ^ 0x4B5u);
            const std::int64_t stride = std::max<std::int64_t>(
                1, static_cast<std::int64_t>(std::ceil(1.0 / (sched->eta() * sched->mu()))));
            const ChainReport chain = run_chain(p, *sched, 20000, rng, stride, options);
            std::vector<double> xs;
            xs.reserve(chain.samples.size());
            for (const Vec& s : chain.samples) xs.push_back(s[0]);
            const QuadratureDensity ref = exact_cdf_1d(p);
            const KsReport ks = ks_test(std::move(xs), ref, 0.02);
            pass = ks.pass;
            detail = {{"statistic", ks.statistic}, {"threshold", ks.threshold},
                      {"n", ks.n}, {"thinning", stride}};
        }
        record("ks_1d", applicable, pass, detail);
    }

    ensure_out_dir(config.out_dir);
    ordered_json report;
    report["command"] = "verify";
    report["target"] = {{"kind", config.target.kind}, {"d", config.target.d}};
    report["negative_control"] = negative_control;
    report["all_pass"] = all_pass;
    report["suites"] = suites;
    write_file(config.out_dir + "/report.json", report.dump(2) + "\n");
    return all_pass ? 0 : kExitVerifyFailed;
}

int cmd_minimize(const RunConfig& config, bool trace) {
    const Potential f = build_target(config.target);
    const Schedule sched = resolve_schedule(config, f);
    if (sched.mu() <= 0.0) throw ConfigError("minimize requires schedule.mu > 0");
    const RegularizedProblem p{f, sched.mu(), config.target.x0};
    const BundleOptions options = bundle_options_from(config, trace);

    const InitReport init = init_at_minimizer_report(p, sched, options);

    ensure_out_dir(config.out_dir);
    ordered_json report;
    report["command"] = "minimize";
    report["target"] = {{"kind", config.target.kind}, {"d", config.target.d}};
    report["mu"] = p.mu;
    report["minimizer"] = init.x;
    report["g_at_minimizer"] = eval_g(p, init.x);
    report["f_at_minimizer"] = p.f.eval(init.x);
    report["outer_steps"] = init.outer_steps;
    report["certificate_sq"] = init.certificate2;
    report["certificate_bound"] = init.bound;
    report["certified"] = init.certificate2 <= init.bound;
    write_file(config.out_dir + "/minimize.json", report.dump(2) + "\n");
    std::printf("minimizer certified: ||x - x_opt||^2 <= %.6g (bound %.6g), %d steps\n",
                init.certificate2, init.bound, init.outer_steps);
    return 0;
}

int cmd_bench(const RunConfig& config) {
    const Potential f = build_target(config.target);
    const double mu = config.schedule.mu.value_or(0.0);
    const RegularizedProblem p{f, mu, config.target.x0};
    const BundleOptions options = bundle_options_from(config, false);
    const double dd = static_cast<double>(p.dim());
    const double M = f.lipschitz_M.value_or(0.0);
    const double L = f.smooth_L.value_or(0.0);

    double em_cap;
    std::vector<double> delta_fractions;
    if (M > 0.0) {
        em_cap = 1.0 / (64.0 * M * M * dd);
        delta_fractions = {1.0, 1.0 / 8.0, 1.0 / 64.0};  // fractions of eta M^2
    } else if (L > 0.0) {
        em_cap = 1.0 / (L * dd);
        delta_fractions = {0.0};  // fixed small delta below
    } else {
        em_cap = 1.0;
        delta_fractions = {0.0};
    }
    if (mu > 0.0) em_cap = std::min(em_cap, 1.0 / mu);

    const std::int64_t calls = 2000;
    std::string csv = "eta,delta,calls,mean_trials,max_trials,mean_bundle_iters,max_bundle_iters\n";
    RngStream root(config.seed ^ 0xBE7C4u);
    int cell = 0;
    for (double em_frac : {1.0, 0.5, 0.25, 0.125}) {
        const double eta = eta_for_eta_mu(em_cap * em_frac, mu);
        for (double frac : delta_fractions) {
            double delta;
            if (M > 0.0)
                delta = std::max(1e-12, eta * M * M * frac);
            else if (L > 0.0)
                delta = 1e-6;
            else
                delta = 0.0;
            const RgoParams params = RgoParams::for_problem(eta, delta, p);

            std::int64_t max_trials = 0, max_bundle = 0, total_rej = 0, total_bundle = 0;
            RngStream grid_rng = root.substream(static_cast<std::uint64_t>(cell++));
            for (std::int64_t i = 0; i < calls; ++i) {
                RngStream call_rng = grid_rng.substream(static_cast<std::uint64_t>(i));
                const Vec y = add_scaled(p.x0, 2.0, call_rng.normal_vec(p.dim()));
                RngStream draw_rng = call_rng.substream(1);
                RgoOutcome outcome;
                if (f.has_prox() && delta == 0.0)
                    outcome = rgo_exact(p, y, params, draw_rng);
                else if (M > 0.0)
                    outcome = rgo_bundle(p, y, params, draw_rng, options);
                else
                    outcome = rgo_smooth(p, y, params, draw_rng, options);
                total_rej += outcome.rejections;
                total_bundle += outcome.bundle_iterations;
                max_trials = std::max(max_trials, outcome.rejections + 1);
                max_bundle = std::max<std::int64_t>(max_bundle, outcome.bundle_iterations);
            }
            char row[256];
            std::snprintf(row, sizeof(row), "%.10g,%.10g,%lld,%.10g,%lld,%.10g,%lld\n", eta,
                          delta, static_cast<long long>(calls),
                          1.0 + static_cast<double>(total_rej) / static_cast<double>(calls),
                          static_cast<long long>(max_trials),
                          static_cast<double>(total_bundle) / static_cast<double>(calls),
                          static_cast<long long>(max_bundle));
            csv += row;
        }
    }
    ensure_out_dir(config.out_dir);
    write_file(config.out_dir + "/bench.csv", csv);
    return 0;
}

}  // namespace proxsamp
