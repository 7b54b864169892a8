#pragma once

// Fused lasso and its variants fitted by FISTA:
//
//     min_x loss(A x + c) + l1 ||x||_1 + l2 TV_p(x)
//
// with least-squares or logistic loss and an optional unpenalized intercept c.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "combiners.hpp"
#include "core.hpp"
#include "io.hpp"
#include "tv1d.hpp"

namespace tvprox {

enum class Loss { least_squares, logistic };

inline Loss parse_loss(const std::string& s) {
    if (s == "ls") return Loss::least_squares;
    if (s == "logistic") return Loss::logistic;
    throw std::invalid_argument("unknown loss '" + s + "'");
}

struct FusedLassoProblem {
    DenseMatrix A;
    Vector y;
    double l1 = 0, l2 = 0;
    Loss loss = Loss::least_squares;
    double p = 1;
    bool intercept = false;

    void validate() const {
        if (A.rows == 0 || A.cols == 0 || A.data.size() != A.rows * A.cols)
            throw std::invalid_argument("fused lasso: malformed design matrix");
        if (y.size() != A.rows)
            throw std::invalid_argument("fused lasso: " + std::to_string(y.size()) + " responses for " +
                                        std::to_string(A.rows) + " rows");
        if (!(l1 >= 0) || !(l2 >= 0)) throw std::invalid_argument("fused lasso: penalties must be >= 0");
        if (!(p >= 1)) throw std::invalid_argument("fused lasso: p must be >= 1");
        if (loss == Loss::logistic)
            for (double v : y)
                if (v != 1 && v != -1) throw std::invalid_argument("fused lasso: logistic responses must be +1 or -1");
    }
};

struct FusedLassoOptions {
    std::size_t max_iter = 20000;
    double tol = 1e-9;  // relative change of the iterate
    SolverOptions prox;  // inner prox settings
};

struct FusedLassoResult {
    Signal x;
    double intercept = 0;
    SolverReport report;
};

namespace fl_detail {

inline Vector matvec(const DenseMatrix& A, std::span<const double> x, double c) {
    Vector r(A.rows, c);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) r[i] += A(i, j) * x[j];
    return r;
}

inline Vector matvec_t(const DenseMatrix& A, std::span<const double> r) {
    Vector g(A.cols, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) g[j] += A(i, j) * r[i];
    return g;
}

inline double log1p_exp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace fl_detail

/// Loss value at (x, c); fills the gradient in x and in c.
inline double fused_lasso_loss(const FusedLassoProblem& prob, std::span<const double> x, double c, Vector* grad,
                               double* grad_c) {
    const Vector z = fl_detail::matvec(prob.A, x, c);
    Vector r(z.size());
    double f = 0;
    if (prob.loss == Loss::least_squares) {
        for (std::size_t i = 0; i < z.size(); ++i) {
            r[i] = z[i] - prob.y[i];
            f += 0.5 * r[i] * r[i];
        }
    } else {
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double m = prob.y[i] * z[i];
            f += fl_detail::log1p_exp(-m);
            r[i] = -prob.y[i] / (1 + std::exp(m));
        }
    }
    if (grad) *grad = fl_detail::matvec_t(prob.A, r);
    if (grad_c) {
        *grad_c = 0;
        for (double v : r) *grad_c += v;
    }
    return f;
}

inline double fused_lasso_penalty(const FusedLassoProblem& prob, std::span<const double> x) {
    double s = 0;
    for (double v : x) s += std::abs(v);
    return prob.l1 * s + (x.size() > 1 ? tv_penalty(x, WeightVector::uniform(prob.l2), prob.p) : 0.0);
}

/// prox of eta (l1 ||.||_1 + l2 TV_p). For p = 1 this is exactly the
/// soft-threshold of the TV prox; otherwise the two terms go through
/// proximal Dykstra.
inline Vector fused_lasso_prox(const FusedLassoProblem& prob, std::span<const double> v, double eta,
                               const SolverOptions& opts, bool* converged = nullptr) {
    auto tv = [&](std::span<const double> u, double s) {
        if (u.size() < 2 || prob.l2 == 0) return Vector(u.begin(), u.end());
        const ProxResult r =
            prox_tv1d(Signal(Vector(u.begin(), u.end())), WeightVector::uniform(prob.l2 * s), prob.p,
                      Tv1dSolver::automatic, opts);
        if (converged && !r.report.converged) *converged = false;
        return r.x.vector();
    };
    if (prob.p == 1 || prob.l1 == 0 || prob.l2 == 0) {
        Vector x = tv(v, eta);
        soft_threshold(x, prob.l1 * eta);
        return x;
    }
    ProxOperator l1op{[&](std::span<const double> u, double s) {
                          Vector x(u.begin(), u.end());
                          soft_threshold(x, prob.l1 * eta * s);
                          return x;
                      },
                      {}, "l1"};
    ProxOperator tvop{[&](std::span<const double> u, double s) { return tv(u, eta * s); }, {}, "tv"};
    const CombinerResult c = combine_pd(v, l1op, tvop, opts);
    if (converged && !c.report.converged) *converged = false;
    return c.x;
}

/// FISTA with backtracking on the step and a restart whenever the objective
/// goes up.
inline FusedLassoResult solve_fused_lasso(const FusedLassoProblem& prob, const FusedLassoOptions& o = {}) {
    prob.validate();
    detail::Stopwatch clock;
    const std::size_t n = prob.A.cols;
    SolverOptions inner = o.prox;
    inner.gap_tol = std::min(inner.gap_tol, 1e-10);
    inner.stop_tol = std::min(inner.stop_tol, 1e-10);

    auto objective = [&](const Vector& x, double c) {
        return fused_lasso_loss(prob, x, c, nullptr, nullptr) + fused_lasso_penalty(prob, x);
    };

    Vector x(n, 0.0), v = x;
    double c = 0, cv = 0, t = 1, eta = 1;
    double f = objective(x, c);
    bool inner_ok = true;
    FusedLassoResult res;
    res.report.solver = std::string(prob.loss == Loss::least_squares ? "fista-ls" : "fista-logistic");
    res.report.converged = false;
    for (std::size_t it = 0; it < o.max_iter; ++it) {
        Vector g;
        double gc = 0;
        const double fv = fused_lasso_loss(prob, v, cv, &g, prob.intercept ? &gc : nullptr);
        Vector xn;
        double cn = cv;
        for (int bt = 0;; ++bt) {
            Vector step(n);
            for (std::size_t j = 0; j < n; ++j) step[j] = v[j] - eta * g[j];
            xn = fused_lasso_prox(prob, step, eta, inner, &inner_ok);
            cn = prob.intercept ? cv - eta * gc : 0.0;
            // sufficient decrease of the smooth part along the prox step
            double lin = fv, sq = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = xn[j] - v[j];
                lin += g[j] * d;
                sq += d * d;
            }
            lin += gc * (cn - cv);
            sq += (cn - cv) * (cn - cv);
            if (fused_lasso_loss(prob, xn, cn, nullptr, nullptr) <= lin + sq / (2 * eta) + 1e-15 * std::abs(fv) ||
                bt > 60)
                break;
            eta *= 0.5;
        }
        const double fn = objective(xn, cn);
        double change = std::abs(cn - c), scale = std::max(1.0, std::abs(cn));
        for (std::size_t j = 0; j < n; ++j) {
            change = std::max(change, std::abs(xn[j] - x[j]));
            scale = std::max(scale, std::abs(xn[j]));
        }
        ++res.report.iterations;
        if (fn > f && t > 1) {
            // restart momentum from the last accepted point
            t = 1;
            v = x;
            cv = c;
            continue;
        }
        const double tn = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
        for (std::size_t j = 0; j < n; ++j) v[j] = xn[j] + (t - 1) / tn * (xn[j] - x[j]);
        cv = cn + (t - 1) / tn * (cn - c);
        t = tn;
        x = std::move(xn);
        c = cn;
        f = fn;
        if (change <= o.tol * scale) {
            res.report.converged = true;
            break;
        }
    }
    if (!inner_ok) res.report.converged = false;
    res.report.objective = f;
    res.report.duality_gap = std::numeric_limits<double>::quiet_NaN();
    res.report.wall_time = clock.elapsed();
    res.x = Signal(std::move(x));
    res.intercept = c;
    return res;
}

/// Random fused lasso data: standard normal A, y = sgn(A x_t + v) with
/// x_t ~ N(0, 1) and v ~ N(0, 0.01), penalties 10 and 10, logistic loss.
inline FusedLassoProblem synthetic_fused_lasso(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0, 1), small(0, 0.1);
    FusedLassoProblem prob;
    prob.A = DenseMatrix{rows, cols, Vector(rows * cols)};
    for (double& a : prob.A.data) a = normal(rng);
    Vector xt(cols);
    for (double& a : xt) a = normal(rng);
    const Vector z = fl_detail::matvec(prob.A, xt, 0);
    prob.y.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) prob.y[i] = z[i] + small(rng) >= 0 ? 1.0 : -1.0;
    prob.l1 = prob.l2 = 10;
    prob.loss = Loss::logistic;
    return prob;
}

}  // namespace tvprox
