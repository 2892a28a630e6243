// Proximal bundle solver for the subproblem
//
//   min_u  g^eta(u) = f(u) + (mu/2)||u - x0||^2 + ||u - y||^2 / (2 eta)
//
// to tolerance delta. The piecewise-linear model max_i l_i(u) is minimized
// through its concave dual over the probability simplex (accelerated
// projected gradient with exact sort-based projection); inactive cuts are
// pruned after every iteration.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "proxsamp/potential.hpp"
#include "proxsamp/vec.hpp"

namespace proxsamp {

// One affine minorant of f: l(u) = value + <slope, u - anchor>.
struct Cut {
    Vec anchor;
    double value = 0.0;
    Vec slope;
    // value - <slope, anchor>, cached so l(u) = offset + <slope, u>.
    double offset = 0.0;

    static Cut at(const Potential& f, const Vec& x);
    double operator()(const Vec& u) const { return offset + dot(slope, u); }
};

enum class CutPolicy { minimal, full };

struct BundleTraceRow {
    int iteration = 0;
    std::size_t n_cuts = 0;
    double gap = 0.0;
    double model_value = 0.0;
};

struct BundleOptions {
    CutPolicy cut_policy = CutPolicy::minimal;
    std::int64_t qp_iteration_cap = 200000;
    std::function<void(const BundleTraceRow&)> trace;
};

struct ModelSolution {
    Vec x;                      // minimizer of the model objective
    double model_value = 0.0;   // model objective at x (cuts max + quadratics)
    double model_fmax = 0.0;    // max_i l_i(x), the model's f-part at x
    std::vector<double> active_weights;  // optimal simplex weights
};

ModelSolution solve_model_subproblem(const std::vector<Cut>& cuts, const Vec& y, const Vec& x0,
                                     double eta, double mu,
                                     std::int64_t qp_iteration_cap = 200000);

struct BundleState {
    std::vector<Cut> cuts;   // C_j used for the current solve
    Vec x_j;                 // model minimizer
    Vec x_tilde;             // incumbent
    double gap = 0.0;        // g^eta(x_tilde) - model_value
    int iteration = 0;
    double model_fmax = 0.0;  // f_j(x_j)
};

struct BundleResult {
    Vec x_j;
    Vec x_tilde;
    int iterations = 0;
    double gap = 0.0;
    double model_min_value = 0.0;   // g_j^eta(x_j) at termination
    double g_eta_incumbent = 0.0;   // g^eta(x_tilde) at termination
    std::vector<Cut> final_cuts;    // model cuts used in the final solve
};

// Cuts retained for the next iteration: active ones (within a relative
// tolerance of f_j(x_j)) plus the new cut generated at x_j.
std::vector<Cut> prune_cuts(const BundleState& state, const Cut& new_cut,
                            CutPolicy policy = CutPolicy::minimal);

// Iteration budget before the solver reports the potential as inconsistent
// with its declared constants. Uses M when available, else the smooth L.
std::int64_t pbs_iteration_cap(const RegularizedProblem& p, double eta, double delta);

BundleResult run_pbs(const RegularizedProblem& p, const Vec& y, double eta, double delta,
                     const BundleOptions& options = {});

// Euclidean projection onto {w >= 0, sum w = 1}; exact, sort-based.
void project_onto_simplex(std::vector<double>& w);

}  // namespace proxsamp
