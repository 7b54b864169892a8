#pragma once

// TV-Lp proximity for 1 < p <= inf through the dual
//
//     min_u 1/2 ||D^T u||^2 - u^T D y   s.t. ||u||_q <= lambda,  1/p + 1/q = 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "tv_l2.hpp"

namespace tvprox {

struct LpProxOptions {
    double tol = 1e-12;        // on ||grad||_inf relative to max(1, ||u||_inf)
    std::size_t max_iter = 200;
};

/// prox of lambda*||.||_p restricted to the nonnegative orthant, for u >= 0:
///
///     min_w 1/2 ||w - u||^2 + lambda ||w||_p,  w >= 0.
///
/// Newton iterations with the diagonal-plus-rank-one Hessian inverted by
/// Sherman-Morrison, so each step is O(n). The minimizer is zero exactly
/// where u is, and strictly positive elsewhere; iterates are kept strictly
/// inside the orthant on that support. `warm`, if given, is a previous
/// solution for a nearby u and is used as a candidate starting point.
inline Vector prox_lp_norm_pn(std::span<const double> u, double lambda, double p, const LpProxOptions& o = {},
                              std::span<const double> warm = {}) {
    if (!(p > 1) || std::isinf(p)) throw std::invalid_argument("prox_lp_norm_pn: p must lie in (1, inf)");
    for (double v : u)
        if (!(v >= 0)) throw std::invalid_argument("prox_lp_norm_pn: u must be nonnegative");
    const std::size_t n = u.size();
    Vector out(n, 0.0);
    if (lambda == 0) return Vector(u.begin(), u.end());
    const double q = detail::conjugate_exponent(p);
    const double uq = detail::norm_p(u, q);
    if (uq <= lambda) return out;

    // Work on the support of u only.
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
        if (u[i] > 0) idx.push_back(i);
    const std::size_t k = idx.size();
    Vector a(k), w(k), g(k), wbar(k), v(k), d(k), trial(k);
    for (std::size_t j = 0; j < k; ++j) a[j] = u[idx[j]];
    const double scale = std::max(1.0, *std::max_element(a.begin(), a.end()));

    // Objective minus the constant 1/2 ||u||^2, which would otherwise swamp
    // the decrease when the minimizer is tiny.
    auto objective = [&](const Vector& x) {
        double s = 0;
        for (std::size_t j = 0; j < k; ++j) s += x[j] * (0.5 * x[j] - a[j]);
        return s + lambda * detail::norm_p(x, p);
    };

    auto gradient = [&](const Vector& x, Vector& grad, Vector& xbar) {
        const double xp = detail::norm_p(x, p);
        double gmax = 0;
        for (std::size_t j = 0; j < k; ++j) {
            xbar[j] = std::pow(x[j] / xp, p - 1);
            grad[j] = x[j] - a[j] + lambda * xbar[j];
            gmax = std::max(gmax, std::abs(grad[j]));
        }
        return gmax;
    };

    // Start from the better of two rays, each scaled optimally: along u
    // (exact for p = 2, good for small lambda) and along u^{q-1}, the
    // direction the minimizer approaches as lambda -> ||u||_q. Near that
    // limit the objective is almost a cone and Newton from a poor direction
    // collapses toward 0.
    auto best_on_ray = [&](Vector ray) {
        const double num = detail::dot(ray, a) - lambda * detail::norm_p(ray, p);
        const double t = num / detail::dot(ray, ray);
        for (double& r : ray) r *= t;
        return ray;
    };
    Vector ray_q(k);
    const double amax = *std::max_element(a.begin(), a.end());
    for (std::size_t j = 0; j < k; ++j) ray_q[j] = std::pow(a[j] / amax, q - 1);
    w = best_on_ray(a);
    if (Vector alt = best_on_ray(ray_q); objective(alt) < objective(w)) w.swap(alt);
    // a ray can still have a nonpositive optimal scale when lambda ~ ||u||_q
    for (std::size_t j = 0; j < k; ++j)
        if (!(w[j] > 0)) w[j] = a[j] * (1 - lambda / uq);
    if (warm.size() == n) {
        Vector alt(k);
        bool positive = true;
        for (std::size_t j = 0; j < k; ++j) positive = positive && (alt[j] = warm[idx[j]]) > 0;
        if (positive && objective(alt) < objective(w)) w.swap(alt);
    }

    Vector gt(k), wbart(k);
    double f = objective(w);
    double gmax = gradient(w, g, wbar);
    for (std::size_t it = 0; it < o.max_iter && gmax > o.tol * scale; ++it) {
        // H = diag(1/v) + c wbar wbar^T with c = lambda (1-p)/||w||_p
        const double wp = detail::norm_p(w, p);
        const double c = lambda * (1 - p) / wp;
        double vg = 0, vw = 0;
        for (std::size_t j = 0; j < k; ++j) {
            v[j] = 1 / (1 - c * wbar[j] * wp / w[j]);  // (w/wp)^{p-2} = wbar wp / w
            vg += wbar[j] * v[j] * g[j];
            vw += wbar[j] * v[j] * wbar[j];
        }
        const double coef = c * vg / (1 + c * vw);
        for (std::size_t j = 0; j < k; ++j) d[j] = v[j] * g[j] - coef * v[j] * wbar[j];

        // Backtrack along the arc w(alpha) = max(w - alpha d, w / 10), which
        // keeps every coordinate strictly positive without letting one small
        // coordinate truncate the whole step. Near the optimum the objective
        // stops resolving the decrease, so a step that halves the gradient
        // is accepted as well.
        bool moved = false;
        for (double alpha = 1; alpha > 1e-16; alpha *= 0.5) {
            double descent = 0;
            for (std::size_t j = 0; j < k; ++j) {
                trial[j] = std::max(w[j] - alpha * d[j], 0.1 * w[j]);
                descent += g[j] * (w[j] - trial[j]);
            }
            const double ft = objective(trial);
            const bool decrease = ft <= f - 1e-4 * descent;
            const double gt_max = gradient(trial, gt, wbart);
            if (!decrease && !(gt_max < 0.5 * gmax)) continue;
            w.swap(trial);
            g.swap(gt);
            wbar.swap(wbart);
            f = ft;
            // stalled at the roundoff floor
            moved = !(gt_max > 0.5 * gmax && gt_max < 1e-9 * scale);
            gmax = gt_max;
            break;
        }
        if (!moved) break;
    }
    for (std::size_t j = 0; j < k; ++j) out[idx[j]] = w[j];
    return out;
}

/// Euclidean projection onto {||w||_1 <= lambda}, pivot-based, expected O(n).
inline Vector project_l1_ball(std::span<const double> u, double lambda) {
    if (!(lambda >= 0)) throw std::invalid_argument("project_l1_ball: lambda must be >= 0");
    Vector out(u.begin(), u.end());
    if (detail::norm_p(u, 1) <= lambda) return out;
    if (lambda == 0) return Vector(u.size(), 0.0);

    Vector a(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) a[i] = std::abs(u[i]);
    std::minstd_rand rng(0x5eed);
    double sum_above = 0;
    std::size_t count_above = 0;
    auto lo = a.begin(), hi = a.end();
    while (lo != hi) {
        std::uniform_int_distribution<std::ptrdiff_t> pick(0, hi - lo - 1);
        std::iter_swap(lo, lo + pick(rng));
        const double pivot = *lo;
        auto mid = std::partition(lo + 1, hi, [pivot](double x) { return x >= pivot; });
        double ds = 0;
        for (auto it = lo; it != mid; ++it) ds += *it;
        const auto dc = static_cast<std::size_t>(mid - lo);
        if ((sum_above + ds) - static_cast<double>(count_above + dc) * pivot < lambda) {
            sum_above += ds;
            count_above += dc;
            lo = mid;
        } else {
            hi = mid;
            ++lo;
        }
    }
    const double theta = (sum_above - lambda) / static_cast<double>(count_above);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double m = std::max(std::abs(u[i]) - theta, 0.0);
        out[i] = std::copysign(m, u[i]);
    }
    return out;
}

/// Euclidean projection onto {||w||_q <= lambda} for q in [1, inf].
inline Vector project_lq_ball(std::span<const double> u, double lambda, double q) {
    if (!(lambda >= 0)) throw std::invalid_argument("project_lq_ball: lambda must be >= 0");
    if (!(q >= 1)) throw std::invalid_argument("project_lq_ball: q must be >= 1");
    Vector out(u.begin(), u.end());
    const double nq = detail::norm_p(u, q);
    if (nq <= lambda) return out;
    if (lambda == 0) return Vector(u.size(), 0.0);
    if (q == 1) return project_l1_ball(u, lambda);
    if (std::isinf(q)) {
        for (double& v : out) v = std::clamp(v, -lambda, lambda);
        return out;
    }
    if (q == 2) {
        for (double& v : out) v *= lambda / nq;
        return out;
    }
    // Moreau: the projection is u - prox_{lambda ||.||_p}(u), computed on |u|.
    const double p = detail::conjugate_exponent(q);
    Vector mag(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) mag[i] = std::abs(u[i]);
    const Vector z = prox_lp_norm_pn(mag, lambda, p);
    // At the optimum u - z = lambda * grad ||z||_p, which lies exactly on the
    // sphere and avoids the cancellation in u - z when lambda << ||u||.
    const double zp = detail::norm_p(z, p);
    if (zp == 0) {
        for (double& v : out) v *= lambda / nq;
        return out;
    }
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::copysign(lambda * std::pow(z[i] / zp, p - 1), u[i]);
    return out;
}

/// Repeated projections onto one lq ball, each warm-started from the
/// previous solution. Used by the iterative solvers, whose consecutive
/// projection inputs are close.
class LqBallProjector {
public:
    LqBallProjector(double lambda, double q) : lambda_(lambda), q_(q) {}

    Vector operator()(std::span<const double> u) {
        const double nq = detail::norm_p(u, q_);
        if (nq <= lambda_ || q_ == 1 || q_ == 2 || std::isinf(q_) || lambda_ == 0)
            return project_lq_ball(u, lambda_, q_);
        const double p = detail::conjugate_exponent(q_);
        Vector mag(u.size()), out(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) mag[i] = std::abs(u[i]);
        z_ = prox_lp_norm_pn(mag, lambda_, p, {}, z_);
        const double zp = detail::norm_p(z_, p);
        if (zp == 0) {
            for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * lambda_ / nq;
            return out;
        }
        for (std::size_t i = 0; i < u.size(); ++i)
            out[i] = std::copysign(lambda_ * std::pow(z_[i] / zp, p - 1), u[i]);
        return out;
    }

private:
    double lambda_, q_;
    Vector z_;
};

namespace detail {

inline void check_p_open(double p) {
    if (!(p > 1) || std::isinf(p)) throw std::invalid_argument("p must lie in (1, inf)");
}

/// Starting dual for the iterative Lp methods: the unconstrained optimum
/// projected into the ball. Returns true if it is already optimal.
inline bool lp_initial_dual(const Signal& y, double lambda, double q, Vector& u) {
    u = unconstrained_dual(y);
    if (norm_p(u, q) <= lambda) return true;
    u = project_lq_ball(u, lambda, q);
    return false;
}

inline void gp_step(const Signal& y, LqBallProjector& project, Vector& u) {
    gradient_step(y, u);
    u = project(u);
}

/// Frank-Wolfe step with exact line search. Returns the surrogate gap
/// (u - s)^T grad at the current point.
inline double fw_step(const Signal& y, double lambda, double p, Vector& u) {
    const std::size_t m = u.size();
    const Vector x = primal_from_dual(y, u);
    Vector z(m);  // gradient D D^T u - D y = -D x
    double zmax = 0;
    for (std::size_t i = 0; i < m; ++i) {
        z[i] = x[i] - x[i + 1];
        zmax = std::max(zmax, std::abs(z[i]));
    }
    if (zmax == 0) return 0;

    // s minimizes s^T z over the q-ball: |s| proportional to |z|^{p-1}.
    // With t = |z|/max|z|: ||t^{p-1}||_q = (sum t^p)^{1/q}.
    Vector s(m);
    double tp = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double t = std::abs(z[i]) / zmax;
        s[i] = std::pow(t, p - 1);
        tp += s[i] * t;
    }
    const double sq = std::pow(tp, 1 - 1 / p);
    for (std::size_t i = 0; i < m; ++i) s[i] = -std::copysign(lambda * s[i] / sq, z[i]);

    Vector d(m);
    double surrogate = 0, dz = 0;
    for (std::size_t i = 0; i < m; ++i) {
        d[i] = s[i] - u[i];
        surrogate -= d[i] * z[i];
        dz += d[i] * z[i];
    }
    const Vector dtd = diff_transpose_apply(d, y.size());
    const double curv = dot(dtd, dtd);
    const double gamma = curv > 0 ? std::clamp(-dz / curv, 0.0, 1.0) : 1.0;
    for (std::size_t i = 0; i < m; ++i) u[i] += gamma * d[i];
    return surrogate;
}

enum class LpMethod { gp, fw, hybrid };

inline ProxResult lp_iterate(const Signal& y, double lambda, double p, const SolverOptions& opts, LpMethod method,
                             const std::string& name) {
    check_lp_inputs(y, lambda, opts);
    check_p(p);
    Stopwatch clock;
    if (y.size() <= 1 || lambda == 0) return trivial_lp(y, lambda, p, name, clock);
    const double q = conjugate_exponent(p);
    const std::size_t m = y.size() - 1;

    SolverReport rep;
    rep.solver = name;
    Vector u;
    if (lp_initial_dual(y, lambda, q, u)) return finish_lp(y, lambda, p, std::move(u), std::move(rep), clock);

    LqBallProjector project(lambda, q);
    rep.converged = false;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        const bool use_gp = method == LpMethod::gp ||
                            (method == LpMethod::hybrid && (it + 1) % (opts.fw_gp_ratio + 1) == 0);
        double surrogate = 0;
        if (use_gp) {
            gp_step(y, project, u);
        } else {
            surrogate = fw_step(y, lambda, p, u);
        }
        ++rep.iterations;
        rep.inner_steps += 3 * m;
        // The surrogate bounds the true gap from above, so it is a cheap pre-check.
        if (!use_gp && surrogate > opts.gap_tol) continue;
        if (dual_gap_lp(u, y, lambda, p) <= opts.gap_tol) {
            rep.converged = true;
            break;
        }
    }
    return finish_lp(y, lambda, p, std::move(u), std::move(rep), clock);
}

}  // namespace detail

/// Gradient projection (stepsize 1/4) with the lq-ball projection.
inline ProxResult prox_tv1d_lp_gp(const Signal& y, double lambda, double p, const SolverOptions& opts = {}) {
    detail::check_p_open(p);
    return detail::lp_iterate(y, lambda, p, opts, detail::LpMethod::gp, "gp");
}

/// Frank-Wolfe with closed-form linear minimization over the q-ball and exact line search.
inline ProxResult prox_tv1d_lp_fw(const Signal& y, double lambda, double p, const SolverOptions& opts = {}) {
    detail::check_p_open(p);
    return detail::lp_iterate(y, lambda, p, opts, detail::LpMethod::fw, "fw");
}

/// opts.fw_gp_ratio Frank-Wolfe steps, then one gradient-projection step, repeated.
inline ProxResult prox_tv1d_lp_hybrid(const Signal& y, double lambda, double p, const SolverOptions& opts = {}) {
    detail::check_p_open(p);
    return detail::lp_iterate(y, lambda, p, opts, detail::LpMethod::hybrid, "gp-fw");
}

/// TV-Linf: gradient projection onto the l1 ball.
inline ProxResult prox_tv1d_linf(const Signal& y, double lambda, const SolverOptions& opts = {}) {
    return detail::lp_iterate(y, lambda, kInfNorm, opts, detail::LpMethod::gp, "gp-linf");
}

}  // namespace tvprox
