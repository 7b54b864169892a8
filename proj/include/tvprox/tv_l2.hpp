#pragma once

// TV-L2 proximity, min_x 1/2 ||x - y||^2 + lambda ||D x||_2, through its dual
//
//     min_u 1/2 ||D^T u||^2 - u^T D y   s.t. ||u||_2 <= lambda,
//
// which is a trust-region subproblem.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "tridiagonal.hpp"

namespace tvprox {

namespace detail {

inline void check_lp_inputs(const Signal& y, double lambda, const SolverOptions& opts) {
    opts.validate();
    if (!(lambda >= 0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
    (void)y;
}

/// Packs a dual iterate into a result; u is scaled into the q-ball first so
/// the returned primal is the one certified by the reported gap.
inline ProxResult finish_lp(const Signal& y, double lambda, double p, Vector u, SolverReport rep,
                            const Stopwatch& clock) {
    const double q = conjugate_exponent(p);
    const double nq = norm_p(u, q);
    if (nq > lambda && nq > 0)
        for (double& v : u) v *= lambda / nq;
    Vector x = y.empty() ? Vector{} : primal_from_dual(y, u);
    rep.duality_gap = y.empty() ? 0.0 : dual_gap_lp(u, y, lambda, p);
    rep.objective = tv_objective(x, y, WeightVector::uniform(lambda), p);
    rep.wall_time = clock.elapsed();
    return ProxResult{Signal(std::move(x)), std::move(rep), DualVector(std::move(u))};
}

/// Solution of D D^T u = D y, the dual optimum when the constraint is inactive.
inline Vector unconstrained_dual(const Signal& y) {
    Vector u = diff_apply(y);
    factor_ddt(u.size()).solve(u);
    return u;
}

/// One gradient-projection step with stepsize 1/4 (1/4 <= 1/||D D^T||), before projection.
inline void gradient_step(const Signal& y, Vector& u) {
    const Vector x = primal_from_dual(y, u);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += 0.25 * (x[i + 1] - x[i]);
}

inline void project_l2_ball(Vector& u, double lambda) {
    const double nu = norm_p(u, 2);
    if (nu > lambda)
        for (double& v : u) v *= lambda / nu;
}

inline ProxResult trivial_lp(const Signal& y, double lambda, double p, const std::string& name,
                             const Stopwatch& clock) {
    SolverReport rep;
    rep.solver = name;
    return finish_lp(y, lambda, p, Vector(y.size() > 1 ? y.size() - 1 : 0, 0.0), rep, clock);
}

}  // namespace detail

/// Moré-Sorensen Newton iteration on the multiplier of the ball constraint.
inline ProxResult prox_tv1d_l2_msn(const Signal& y, double lambda, const SolverOptions& opts = {}) {
    detail::check_lp_inputs(y, lambda, opts);
    detail::Stopwatch clock;
    if (y.size() <= 1 || lambda == 0) return detail::trivial_lp(y, lambda, 2, "msn", clock);
    const std::size_t m = y.size() - 1;
    const Vector dy = diff_apply(y);

    SolverReport rep;
    rep.solver = "msn";
    rep.converged = false;
    double alpha = 0;
    Vector u;
    for (std::size_t it = 0; it <= opts.max_iter; ++it) {
        const TridiagonalFactor r = factor_ddt(m, alpha);
        u = dy;
        r.solve(u);
        rep.inner_steps += 3 * m;
        const double nu = detail::norm_p(u, 2);
        if (alpha == 0 && nu <= lambda) {
            rep.converged = true;  // constraint inactive
            break;
        }
        if (std::abs(nu - lambda) <= opts.boundary_tol * lambda &&
            detail::finish_lp(y, lambda, 2, u, {}, clock).report.duality_gap <= opts.gap_tol) {
            rep.converged = true;
            break;
        }
        if (it == opts.max_iter) break;
        ++rep.iterations;
        Vector q = u;
        r.solve_lower(q);
        rep.inner_steps += m;
        const double nq2 = detail::dot(q, q);
        alpha = std::max(0.0, alpha - (nu * nu / nq2) * (1 - nu / lambda));
    }
    return detail::finish_lp(y, lambda, 2, std::move(u), std::move(rep), clock);
}

namespace detail {

/// Projected gradient on the l2-ball dual, starting from `u`, for at most
/// `budget` iterations.
inline ProxResult l2_gp_from(const Signal& y, double lambda, Vector u, std::size_t budget,
                             const SolverOptions& opts, const Stopwatch& clock, std::string name) {
    const std::size_t m = y.size() - 1;
    SolverReport rep;
    rep.solver = std::move(name);
    rep.converged = false;
    for (std::size_t it = 0;; ++it) {
        if (dual_gap_lp(u, y, lambda, 2) <= opts.gap_tol) {
            rep.converged = true;
            break;
        }
        if (it == budget) break;
        ++rep.iterations;
        gradient_step(y, u);
        project_l2_ball(u, lambda);
        rep.inner_steps += 2 * m;
    }
    return finish_lp(y, lambda, 2, std::move(u), std::move(rep), clock);
}

}  // namespace detail

/// Gradient projection with fixed stepsize 1/4, started from the unconstrained
/// dual optimum scaled into the ball.
inline ProxResult prox_tv1d_l2_gp(const Signal& y, double lambda, const SolverOptions& opts = {}) {
    detail::check_lp_inputs(y, lambda, opts);
    detail::Stopwatch clock;
    if (y.size() <= 1 || lambda == 0) return detail::trivial_lp(y, lambda, 2, "gp", clock);
    Vector u = detail::unconstrained_dual(y);
    detail::project_l2_ball(u, lambda);
    return detail::l2_gp_from(y, lambda, std::move(u), opts.max_iter, opts, clock, "gp");
}

/// GP when lambda < ||y||_2 (falling back to MSN after 50 unsuccessful
/// iterations), MSN otherwise.
inline ProxResult prox_tv1d_l2_hybrid(const Signal& y, double lambda, const SolverOptions& opts = {}) {
    constexpr std::size_t kGpBudget = 50;
    detail::check_lp_inputs(y, lambda, opts);
    detail::Stopwatch clock;
    if (y.size() <= 1 || lambda == 0) return detail::trivial_lp(y, lambda, 2, "hybrid", clock);
    if (lambda < detail::norm_p(y.values(), 2)) {
        Vector u = detail::unconstrained_dual(y);
        detail::project_l2_ball(u, lambda);
        auto gp = detail::l2_gp_from(y, lambda, std::move(u), std::min(kGpBudget, opts.max_iter), opts, clock,
                                     "hybrid(gp)");
        if (gp.report.converged) return gp;
        auto msn = prox_tv1d_l2_msn(y, lambda, opts);
        msn.report.solver = "hybrid(gp,msn)";
        msn.report.iterations += gp.report.iterations;
        msn.report.inner_steps += gp.report.inner_steps;
        msn.report.wall_time = clock.elapsed();
        return msn;
    }
    auto msn = prox_tv1d_l2_msn(y, lambda, opts);
    msn.report.solver = "hybrid(msn)";
    return msn;
}

}  // namespace tvprox
