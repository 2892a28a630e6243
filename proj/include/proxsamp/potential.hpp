// Convex potentials f (negative log-densities), their regularized problems
// g = f + (mu/2)||. - x0||^2, and the derived stepsize quantities.
//
// A Potential must be finite and convex on all of R^d. subgrad returns one
// deterministic element of the subdifferential; the kink conventions are:
// l1 uses sign(0) = +1, max_affine returns the first maximizing row, l2norm
// returns the zero vector at the origin.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "proxsamp/vec.hpp"

namespace proxsamp {

struct Potential {
    std::function<double(const Vec&)> eval;
    std::function<Vec(const Vec&)> subgrad;
    // prox(y, step) = argmin_u f(u) + ||u - y||^2 / (2*step); empty when f has
    // no cheap proximal mapping.
    std::function<Vec(const Vec&, double)> prox;
    // Bound on ||f'(x)||_2 over R^d, when f is Lipschitz.
    std::optional<double> lipschitz_M;
    // Gradient Lipschitz constant, when f is smooth.
    std::optional<double> smooth_L;
    std::string name;

    bool has_prox() const { return static_cast<bool>(prox); }
};

// f(x) = 0. M = 0, prox = identity.
Potential make_zero();

// f(x) = M * sum_i |x_i|. Exact 2-norm Lipschitz constant is M*sqrt(d), so the
// ambient dimension is fixed at construction. Componentwise soft-threshold prox.
Potential make_l1(double M, std::size_t d);

// f(x) = M * ||x||_2, with the block soft-threshold prox.
Potential make_l2norm(double M);

// f(x) = max_i (<a_i, x> + b_i). M = max_i ||a_i||_2, no prox.
Potential make_max_affine(std::vector<Vec> rows, Vec offsets);

// f(x) = x^T S x / 2 for symmetric PSD S. L = lambda_max(S), no prox.
Potential make_quadratic(const std::vector<Vec>& S);

// f(x) = phi(||x||_2) with phi quadratic below `threshold` and affine above,
// scaled so ||grad f|| <= M everywhere. Both M and L = M/threshold are exact.
Potential make_huber(double M, double threshold);

struct RegularizedProblem {
    Potential f;
    double mu = 0.0;
    Vec x0;

    std::size_t dim() const { return x0.size(); }
};

// g(x) = f(x) + (mu/2) ||x - x0||^2
double eval_g(const RegularizedProblem& p, const Vec& x);

// g^eta(x) = g(x) + ||x - y||^2 / (2 eta)
double eval_g_eta(const RegularizedProblem& p, const Vec& y, double eta, const Vec& x);

// eta / (1 + eta*mu)
double eta_mu(double eta, double mu);

struct RgoParams {
    double eta = 0.0;
    double delta = 0.0;
    double eta_mu = 0.0;                  // eta / (1 + eta*mu)
    std::optional<double> eta_mu_L;       // eta / (1 + eta*mu + eta*L), when L is known

    static RgoParams for_problem(double eta, double delta, const RegularizedProblem& p);
};

// Largest eigenvalue of a symmetric matrix (cyclic Jacobi); used for builtin
// metadata and exposed for tests.
double symmetric_lambda_max(const std::vector<Vec>& S);

}  // namespace proxsamp
