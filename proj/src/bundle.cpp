#include "proxsamp/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "proxsamp/errors.hpp"

namespace proxsamp {

Cut Cut::at(const Potential& f, const Vec& x) {
    Cut c;
    c.anchor = x;
    c.value = f.eval(x);
    c.slope = f.subgrad(x);
    c.offset = c.value - dot(c.slope, c.anchor);
    return c;
}

void project_onto_simplex(std::vector<double>& w) {
    const std::size_t n = w.size();
    std::vector<double> sorted(w);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double running = 0.0;
    double theta = sorted[0] - 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        running += sorted[k];
        const double candidate = (running - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] - candidate > 0.0) theta = candidate;
    }
    for (double& v : w) v = std::max(0.0, v - theta);
    // renormalize away rounding drift
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    if (s > 0.0)
        for (double& v : w) v /= s;
}

namespace {

// Dual of the model subproblem. With sigma = mu + 1/eta and u0 the minimizer
// of the quadratic part (sigma*u0 = mu*x0 + y/eta), the model objective is
//   max_i l_i(u) + (sigma/2)||u - u0||^2 + quad_const,
// its dual over the simplex is
//   q(lambda) = lin'lambda - lambda'G lambda/(2 sigma) + quad_const,
// with G_ij = <s_i, s_j>, lin_i = l_i(u0), and primal point
// u(lambda) = u0 - sum_i lambda_i s_i / sigma. Everything is evaluated in
// coordinates shifted by u0 so the duality gap is free of large cancellations.
struct DualQp {
    const std::vector<Cut>& cuts;
    double sigma;
    Vec u0;
    double quad_const;
    std::vector<std::vector<double>> gram;
    std::vector<double> lin;

    DualQp(const std::vector<Cut>& cuts_, const Vec& y, const Vec& x0, double eta, double mu)
        : cuts(cuts_), sigma(mu + 1.0 / eta) {
        const std::size_t k = cuts.size();
        const std::size_t d = y.size();
        u0.assign(d, 0.0);
        axpy(mu, x0, u0);
        axpy(1.0 / eta, y, u0);
        for (double& v : u0) v /= sigma;
        // (mu/2)||u0-x0||^2 + ||u0-y||^2/(2 eta), the quadratic part at its minimum
        quad_const = 0.5 * mu * dist2(u0, x0) + dist2(u0, y) / (2.0 * eta);

        gram.assign(k, std::vector<double>(k));
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                const double gij = dot(cuts[i].slope, cuts[j].slope);
                gram[i][j] = gij;
                gram[j][i] = gij;
            }
        }

        lin.resize(k);
        for (std::size_t i = 0; i < k; ++i) lin[i] = cuts[i](u0);
    }

    Vec primal_point(const std::vector<double>& lambda) const {
        Vec sbar(u0.size(), 0.0);
        for (std::size_t i = 0; i < cuts.size(); ++i) {
            if (lambda[i] != 0.0) axpy(lambda[i], cuts[i].slope, sbar);
        }
        return add_scaled(u0, -1.0 / sigma, sbar);
    }

    // grad q(lambda)_i = lin_i - (G lambda)_i / sigma; equals l_i(u(lambda)).
    void gradient(const std::vector<double>& lambda, std::vector<double>& out) const {
        const std::size_t k = cuts.size();
        out.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            double glam = 0.0;
            const std::vector<double>& row = gram[i];
            for (std::size_t j = 0; j < k; ++j) glam += row[j] * lambda[j];
            out[i] = lin[i] - glam / sigma;
        }
    }

    // Since u(lambda) is stationary by construction, the duality gap equals
    // the complementarity residual sum_i lambda_i (fmax(u) - l_i(u)), which is
    // nonnegative termwise and free of cross-path cancellation.
    double primal_and_gap(const Vec& u, const std::vector<double>& lambda, double* fmax_out,
                          double* gap_out) const {
        const std::size_t k = cuts.size();
        double fmax = cuts[0](u);
        for (std::size_t i = 1; i < k; ++i) fmax = std::max(fmax, cuts[i](u));
        double gap = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (lambda[i] != 0.0) gap += lambda[i] * (fmax - cuts[i](u));
        }
        if (fmax_out != nullptr) *fmax_out = fmax;
        if (gap_out != nullptr) *gap_out = gap;
        return fmax + 0.5 * sigma * dist2(u, u0) + quad_const;
    }
};

}  // namespace

namespace {

// Equality-constrained KKT solve on the working set W:
//   [ G_WW/sigma  1 ] [lambda_W]   [ b_W ]
//   [ 1'          0 ] [   nu    ] = [  1  ]
// Gaussian elimination with partial pivoting; a tiny ridge handles exactly
// duplicated cuts (the primal point is insensitive to the degenerate split).
bool kkt_solve(const DualQp& qp, const std::vector<std::size_t>& active, double ridge,
               std::vector<double>& lambda_out, double& nu_out) {
    const std::size_t m = active.size();
    const std::size_t n = m + 1;
    std::vector<std::vector<double>> A(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) A[i][j] = qp.gram[active[i]][active[j]] / qp.sigma;
        A[i][i] += ridge;
        A[i][m] = 1.0;
        A[i][n] = qp.lin[active[i]];
        A[m][i] = 1.0;
    }
    A[m][m] = 0.0;
    A[m][n] = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
        if (std::abs(A[pivot][col]) < 1e-300) return false;
        std::swap(A[col], A[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = A[r][col] / A[col][col];
            if (factor == 0.0) continue;
            for (std::size_t c = col; c <= n; ++c) A[r][c] -= factor * A[col][c];
        }
    }
    lambda_out.resize(m);
    for (std::size_t i = 0; i < m; ++i) lambda_out[i] = A[i][n] / A[i][i];
    nu_out = A[m][n] / A[m][m];
    return true;
}

}  // namespace

// Exact dual active-set method. Projected/accelerated gradient on the simplex
// stalls on clusters of near-duplicate tangent cuts (it needs ~1/spread
// iterations to resolve which cut carries the weight), so the 1e-10 gap
// contract is enforced with an active-set solve instead; cut counts are small,
// making each KKT system trivial.
ModelSolution solve_model_subproblem(const std::vector<Cut>& cuts, const Vec& y, const Vec& x0,
                                     double eta, double mu, std::int64_t qp_iteration_cap) {
    if (cuts.empty()) throw ConfigError("solve_model_subproblem: needs at least one cut");
    const std::size_t k = cuts.size();
    const DualQp qp(cuts, y, x0, eta, mu);

    double scale = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        scale = std::max(scale, std::abs(qp.lin[i]) + qp.gram[i][i] / qp.sigma);

    // start from the best single-cut vertex
    std::size_t start = 0;
    double start_val = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        const double v = qp.lin[i] - qp.gram[i][i] / (2.0 * qp.sigma);
        if (v > start_val) {
            start_val = v;
            start = i;
        }
    }
    std::vector<std::size_t> active{start};
    std::vector<double> lambda_active{1.0};

    auto evaluate = [&](ModelSolution& out) {
        std::vector<double> full(k, 0.0);
        for (std::size_t i = 0; i < active.size(); ++i) full[active[i]] = lambda_active[i];
        Vec u = qp.primal_point(full);
        double fmax = 0.0, gap = 0.0;
        const double primal = qp.primal_and_gap(u, full, &fmax, &gap);
        out.x = std::move(u);
        out.model_value = primal;
        out.model_fmax = fmax;
        out.active_weights = std::move(full);
        return gap;
    };

    double best_gap = std::numeric_limits<double>::infinity();
    ModelSolution best;
    double add_tol = 1e-13 * scale;

    for (std::int64_t iter = 0;; ++iter) {
        if (iter >= qp_iteration_cap) {
            if (!best.active_weights.empty()) {
                ModelSolution current;
                const double gap = evaluate(current);
                if (gap < best_gap) {
                    best_gap = gap;
                    best = std::move(current);
                }
            } else {
                best_gap = evaluate(best);
            }
            throw SolverCapError("model subproblem QP did not converge; best dual gap " +
                                     std::to_string(best_gap),
                                 best_gap);
        }

        std::vector<double> trial;
        double nu = 0.0;
        auto solved = [&](double ridge) {
            if (!kkt_solve(qp, active, ridge, trial, nu)) return false;
            if (!std::isfinite(nu)) return false;
            for (double v : trial)
                if (!std::isfinite(v)) return false;
            return true;
        };
        if (!solved(0.0) && !solved(1e-12 * scale / qp.sigma)) {
            throw SolverCapError("model subproblem KKT system is singular", best_gap);
        }

        double min_trial = 0.0;
        std::size_t min_idx = 0;
        for (std::size_t i = 0; i < trial.size(); ++i) {
            if (trial[i] < min_trial) {
                min_trial = trial[i];
                min_idx = i;
            }
        }
        if (min_trial < -1e-12) {
            // ratio step toward the trial point, drop the blocking coordinate
            double alpha = 1.0;
            std::size_t drop = min_idx;
            for (std::size_t i = 0; i < trial.size(); ++i) {
                if (trial[i] < 0.0 && lambda_active[i] > trial[i]) {
                    const double a = lambda_active[i] / (lambda_active[i] - trial[i]);
                    if (a < alpha) {
                        alpha = a;
                        drop = i;
                    }
                }
            }
            for (std::size_t i = 0; i < trial.size(); ++i)
                lambda_active[i] += alpha * (trial[i] - lambda_active[i]);
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
            lambda_active.erase(lambda_active.begin() + static_cast<std::ptrdiff_t>(drop));
            continue;
        }
        double mass = 0.0;
        for (std::size_t i = 0; i < trial.size(); ++i) {
            lambda_active[i] = std::max(0.0, trial[i]);
            mass += lambda_active[i];
        }
        for (double& v : lambda_active) v /= mass;

        // dual feasibility: l_i(u) <= nu for inactive cuts
        std::vector<double> full(k, 0.0);
        for (std::size_t i = 0; i < active.size(); ++i) full[active[i]] = lambda_active[i];
        std::vector<double> grad;
        qp.gradient(full, grad);
        double worst = 0.0;
        std::size_t worst_idx = k;
        for (std::size_t i = 0; i < k; ++i) {
            if (full[i] > 0.0) continue;
            bool in_active = false;
            for (std::size_t a : active)
                if (a == i) in_active = true;
            if (in_active) continue;
            const double viol = grad[i] - nu;
            if (viol > worst) {
                worst = viol;
                worst_idx = i;
            }
        }
        if (worst_idx != k && worst > add_tol) {
            active.push_back(worst_idx);
            lambda_active.push_back(0.0);
            continue;
        }

        ModelSolution candidate;
        const double gap = evaluate(candidate);
        if (gap < best_gap) {
            best_gap = gap;
            best = std::move(candidate);
        }
        if (best_gap <= 1e-10 * (1.0 + std::abs(best.model_value))) return best;
        // residual above the contract: pull in the next-worst cut and refine
        if (worst_idx != k) {
            active.push_back(worst_idx);
            lambda_active.push_back(0.0);
            add_tol *= 0.1;
            continue;
        }
        return best;  // no violator left; gap is at the floating floor
    }
}

std::vector<Cut> prune_cuts(const BundleState& state, const Cut& new_cut, CutPolicy policy) {
    std::vector<Cut> next;
    if (policy == CutPolicy::full) {
        next = state.cuts;
    } else {
        const double activity_tol = 1e-9 * (1.0 + std::abs(state.model_fmax));
        for (const Cut& c : state.cuts) {
            if (c(state.x_j) >= state.model_fmax - activity_tol) next.push_back(c);
        }
    }
    next.push_back(new_cut);
    return next;
}

std::int64_t pbs_iteration_cap(const RegularizedProblem& p, double eta, double delta) {
    const double em = eta_mu(eta, p.mu);
    double work;
    if (p.f.lipschitz_M) {
        const double M = *p.f.lipschitz_M;
        work = em * M * M / delta + 1.0;
    } else if (p.f.smooth_L) {
        work = em * *p.f.smooth_L + 1.0;
    } else {
        throw ConfigError("run_pbs: potential declares neither lipschitz_M nor smooth_L");
    }
    const double capped = std::ceil(8.0 * work * std::log(1.0 / delta));
    return std::max<std::int64_t>(64, static_cast<std::int64_t>(capped));
}

BundleResult run_pbs(const RegularizedProblem& p, const Vec& y, double eta, double delta,
                     const BundleOptions& options) {
    if (eta <= 0.0) throw ConfigError("run_pbs: eta must be positive");
    if (delta <= 0.0) throw ConfigError("run_pbs: delta must be positive (use the prox path for delta = 0)");
    const std::int64_t cap = pbs_iteration_cap(p, eta, delta);

    BundleState state;
    state.x_tilde = y;
    double g_eta_incumbent = eval_g_eta(p, y, eta, y);
    state.cuts = {Cut::at(p.f, y)};

    for (int j = 1;; ++j) {
        ModelSolution sol =
            solve_model_subproblem(state.cuts, y, p.x0, eta, p.mu, options.qp_iteration_cap);
        state.x_j = std::move(sol.x);
        state.model_fmax = sol.model_fmax;
        state.iteration = j;

        const double f_at_xj = p.f.eval(state.x_j);
        const double g_eta_xj = f_at_xj + 0.5 * p.mu * dist2(state.x_j, p.x0) +
                                dist2(state.x_j, y) / (2.0 * eta);
        // incumbent update; ties keep the previous incumbent
        if (g_eta_xj < g_eta_incumbent) {
            g_eta_incumbent = g_eta_xj;
            state.x_tilde = state.x_j;
        }
        state.gap = g_eta_incumbent - sol.model_value;

        if (options.trace) {
            options.trace({j, state.cuts.size(), state.gap, sol.model_value});
        }
        if (state.gap <= delta) {
            BundleResult result;
            result.x_j = state.x_j;
            result.x_tilde = state.x_tilde;
            result.iterations = j;
            result.gap = state.gap;
            result.model_min_value = sol.model_value;
            result.g_eta_incumbent = g_eta_incumbent;
            result.final_cuts = std::move(state.cuts);
            return result;
        }
        if (j >= cap) {
            throw SolverCapError(
                "bundle iteration cap exceeded (declared Lipschitz/smoothness constants "
                "likely violated); last gap " +
                    std::to_string(state.gap),
                state.gap);
        }

        Cut new_cut;
        new_cut.anchor = state.x_j;
        new_cut.value = f_at_xj;
        new_cut.slope = p.f.subgrad(state.x_j);
        new_cut.offset = new_cut.value - dot(new_cut.slope, new_cut.anchor);
        state.cuts = prune_cuts(state, new_cut, options.cut_policy);
    }
}

}  // namespace proxsamp
