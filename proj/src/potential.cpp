#include "proxsamp/potential.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "proxsamp/errors.hpp"

namespace proxsamp {

namespace {

// Cyclic Jacobi eigenvalue sweep for small symmetric matrices. Returns all
// eigenvalues; S is taken by value and destroyed.
std::vector<double> symmetric_eigenvalues(std::vector<Vec> S) {
    const std::size_t n = S.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += S[i][j] * S[i][j];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(S[p][q]) < 1e-300) continue;
                const double theta = (S[q][q] - S[p][p]) / (2.0 * S[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double skp = S[k][p], skq = S[k][q];
                    S[k][p] = c * skp - s * skq;
                    S[k][q] = s * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double spk = S[p][k], sqk = S[q][k];
                    S[p][k] = c * spk - s * sqk;
                    S[q][k] = s * spk + c * sqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = S[i][i];
    return eig;
}

void check_square_symmetric(const std::vector<Vec>& S) {
    const std::size_t n = S.size();
    if (n == 0) throw ConfigError("quadratic: matrix S is empty");
    double scale = 0.0;
    for (const Vec& row : S) {
        if (row.size() != n) throw ConfigError("quadratic: matrix S is not square");
        for (double v : row) scale = std::max(scale, std::abs(v));
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(S[i][j] - S[j][i]) > 1e-12 * (1.0 + scale))
                throw ConfigError("quadratic: matrix S is not symmetric");
}

}  // namespace

double symmetric_lambda_max(const std::vector<Vec>& S) {
    check_square_symmetric(S);
    const std::vector<double> eig = symmetric_eigenvalues(S);
    return *std::max_element(eig.begin(), eig.end());
}

Potential make_zero() {
    Potential f;
    f.name = "zero";
    f.eval = [](const Vec&) { return 0.0; };
    f.subgrad = [](const Vec& x) { return Vec(x.size(), 0.0); };
    f.prox = [](const Vec& y, double) { return y; };
    f.lipschitz_M = 0.0;
    f.smooth_L = 0.0;
    return f;
}

Potential make_l1(double M, std::size_t d) {
    if (M < 0.0) throw ConfigError("l1: M must be nonnegative");
    if (d == 0) throw ConfigError("l1: dimension must be >= 1");
    Potential f;
    f.name = "l1";
    f.eval = [M](const Vec& x) {
        double s = 0.0;
        for (double v : x) s += std::abs(v);
        return M * s;
    };
    f.subgrad = [M](const Vec& x) {
        Vec g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = (x[i] < 0.0) ? -M : M;
        return g;
    };
    f.prox = [M](const Vec& y, double step) {
        const double tau = M * step;
        Vec out(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] > tau)
                out[i] = y[i] - tau;
            else if (y[i] < -tau)
                out[i] = y[i] + tau;
            else
                out[i] = 0.0;
        }
        return out;
    };
    f.lipschitz_M = M * std::sqrt(static_cast<double>(d));
    if (M == 0.0) f.smooth_L = 0.0;
    return f;
}

Potential make_l2norm(double M) {
    if (M < 0.0) throw ConfigError("l2norm: M must be nonnegative");
    Potential f;
    f.name = "l2norm";
    f.eval = [M](const Vec& x) { return M * nrm2(x); };
    f.subgrad = [M](const Vec& x) {
        const double r = nrm2(x);
        if (r == 0.0) return Vec(x.size(), 0.0);
        Vec g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = M * x[i] / r;
        return g;
    };
    f.prox = [M](const Vec& y, double step) {
        const double r = nrm2(y);
        const double tau = M * step;
        if (r <= tau) return Vec(y.size(), 0.0);
        const double shrink = 1.0 - tau / r;
        Vec out(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) out[i] = shrink * y[i];
        return out;
    };
    f.lipschitz_M = M;
    return f;
}

Potential make_max_affine(std::vector<Vec> rows, Vec offsets) {
    if (rows.empty()) throw ConfigError("max_affine: affine family is empty");
    if (rows.size() != offsets.size())
        throw ConfigError("max_affine: rows and offsets differ in length");
    const std::size_t d = rows.front().size();
    double M = 0.0;
    for (const Vec& a : rows) {
        if (a.size() != d) throw ConfigError("max_affine: rows differ in dimension");
        M = std::max(M, nrm2(a));
    }
    auto shared_rows = std::make_shared<std::vector<Vec>>(std::move(rows));
    auto shared_off = std::make_shared<Vec>(std::move(offsets));

    auto argmax = [shared_rows, shared_off](const Vec& x) {
        std::size_t best = 0;
        double best_val = dot((*shared_rows)[0], x) + (*shared_off)[0];
        for (std::size_t i = 1; i < shared_rows->size(); ++i) {
            const double v = dot((*shared_rows)[i], x) + (*shared_off)[i];
            if (v > best_val) {
                best_val = v;
                best = i;
            }
        }
        return std::pair<std::size_t, double>{best, best_val};
    };

    Potential f;
    f.name = "max_affine";
    f.eval = [argmax](const Vec& x) { return argmax(x).second; };
    f.subgrad = [argmax, shared_rows](const Vec& x) { return (*shared_rows)[argmax(x).first]; };
    f.lipschitz_M = M;
    return f;
}

Potential make_quadratic(const std::vector<Vec>& S) {
    check_square_symmetric(S);
    const std::vector<double> eig = symmetric_eigenvalues(S);
    const double lam_max = *std::max_element(eig.begin(), eig.end());
    const double lam_min = *std::min_element(eig.begin(), eig.end());
    if (lam_min < -1e-10 * std::max(1.0, lam_max))
        throw ConfigError("quadratic: matrix S is not positive semidefinite");

    auto shared = std::make_shared<std::vector<Vec>>(S);
    auto matvec = [shared](const Vec& x) {
        Vec out(x.size());
        for (std::size_t i = 0; i < shared->size(); ++i) out[i] = dot((*shared)[i], x);
        return out;
    };

    Potential f;
    f.name = "quadratic";
    f.eval = [matvec](const Vec& x) { return 0.5 * dot(x, matvec(x)); };
    f.subgrad = matvec;
    f.smooth_L = lam_max;
    return f;
}

Potential make_huber(double M, double threshold) {
    if (M < 0.0) throw ConfigError("huber: M must be nonnegative");
    if (threshold <= 0.0) throw ConfigError("huber: threshold must be positive");
    Potential f;
    f.name = "huber";
    const double t = threshold;
    f.eval = [M, t](const Vec& x) {
        const double r = nrm2(x);
        return r <= t ? M * r * r / (2.0 * t) : M * (r - t / 2.0);
    };
    f.subgrad = [M, t](const Vec& x) {
        const double r = nrm2(x);
        const double slope = (r <= t) ? M / t : M / r;  // grad = slope * x
        Vec g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = slope * x[i];
        return g;
    };
    f.lipschitz_M = M;
    f.smooth_L = M / t;
    return f;
}

double eval_g(const RegularizedProblem& p, const Vec& x) {
    double v = p.f.eval(x);
    if (p.mu != 0.0) v += 0.5 * p.mu * dist2(x, p.x0);
    return v;
}

double eval_g_eta(const RegularizedProblem& p, const Vec& y, double eta, const Vec& x) {
    return eval_g(p, x) + dist2(x, y) / (2.0 * eta);
}

double eta_mu(double eta, double mu) { return eta / (1.0 + eta * mu); }

RgoParams RgoParams::for_problem(double eta, double delta, const RegularizedProblem& p) {
    if (eta <= 0.0) throw ConfigError("eta must be positive");
    if (delta < 0.0) throw ConfigError("delta must be nonnegative");
    RgoParams params;
    params.eta = eta;
    params.delta = delta;
    params.eta_mu = proxsamp::eta_mu(eta, p.mu);
    if (p.f.smooth_L) {
        params.eta_mu_L = eta / (1.0 + eta * p.mu + eta * *p.f.smooth_L);
    }
    return params;
}

}  // namespace proxsamp
