#pragma once

// Projected Newton on the box-constrained dual of weighted TV-L1:
//
//     min_u 1/2 ||D^T u||^2 - u^T D y   s.t. |u_i| <= w_i
//
// The Hessian D D^T is tridiagonal and so is every principal submatrix, which
// makes each Newton step O(n).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "tridiagonal.hpp"

namespace tvprox {

/// Variables pinned at a bound whose gradient pushes them further out.
class ActiveSet {
public:
    ActiveSet() = default;
    explicit ActiveSet(std::vector<bool> mask) : active_(std::move(mask)) {}

    /// Active iff (u_i = -w_i and g_i > eps) or (u_i = w_i and g_i < -eps).
    static ActiveSet select(std::span<const double> u, std::span<const double> grad, const WeightVector& w,
                            double eps = 1e-12) {
        std::vector<bool> mask(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            mask[i] = (u[i] <= -w[i] && grad[i] > eps) || (u[i] >= w[i] && grad[i] < -eps);
        return ActiveSet(std::move(mask));
    }

    std::size_t size() const noexcept { return active_.size(); }
    bool active(std::size_t i) const { return active_[i]; }

    /// Free (inactive) indices in increasing order.
    std::vector<std::size_t> free_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < active_.size(); ++i)
            if (!active_[i]) out.push_back(i);
        return out;
    }

private:
    std::vector<bool> active_;
};

/// Solves H d = rhs where H is D D^T restricted to the free indices: 2 on the
/// diagonal, -1 only between free indices that are neighbours in the original
/// ordering.
inline Vector reduced_hessian_solve(const ActiveSet& active, std::span<const double> rhs) {
    const auto free = active.free_indices();
    if (free.empty()) throw std::invalid_argument("reduced_hessian_solve: empty reduced system");
    if (rhs.size() != free.size()) throw std::invalid_argument("reduced_hessian_solve: rhs length mismatch");
    Vector diag(free.size(), 2.0), off(free.size() - 1);
    for (std::size_t j = 0; j + 1 < free.size(); ++j) off[j] = free[j + 1] == free[j] + 1 ? -1.0 : 0.0;
    TridiagonalFactor f(diag, off);
    Vector d(rhs.begin(), rhs.end());
    f.solve(d);
    return d;
}

/// The dual box QP of a weighted TV-L1 prox problem.
class DualBoxQP {
public:
    DualBoxQP(std::span<const double> y, const WeightVector& w) : y_(y), w_(w), dy_(diff_apply(y)) {}

    std::size_t size() const noexcept { return dy_.size(); }
    const WeightVector& weights() const noexcept { return w_; }

    double value(std::span<const double> u) const {
        const Vector dtu = diff_transpose_apply(u, y_.size());
        return 0.5 * detail::dot(dtu, dtu) - detail::dot(u, dy_);
    }

    /// D D^T u - D y, i.e. -D x for x = y - D^T u.
    Vector gradient(std::span<const double> u) const {
        Vector g = diff_apply(primal_from_dual(y_, u));
        for (double& v : g) v = -v;
        return g;
    }

    void project(std::span<double> u) const {
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::clamp(u[i], -w_[i], w_[i]);
    }

    /// P[u - alpha d]
    Vector step(std::span<const double> u, std::span<const double> d, double alpha) const {
        Vector v(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] - alpha * d[i];
        project(v);
        return v;
    }

    /// Gradient with the entries zeroed where d would push u outside the box.
    Vector corrected_gradient(std::span<const double> u, std::span<const double> g,
                              std::span<const double> d) const {
        Vector out(g.begin(), g.end());
        for (std::size_t i = 0; i < u.size(); ++i)
            if ((u[i] >= w_[i] && d[i] < 0) || (u[i] <= -w_[i] && d[i] > 0)) out[i] = 0;
        return out;
    }

private:
    std::span<const double> y_;
    const WeightVector& w_;
    Vector dy_;
};

struct StepsizeResult {
    double alpha = 1;
    double value = 0;          // objective at the accepted point
    std::size_t evaluations = 0;
};

/// Backtracking with quadratic interpolation: accept alpha once
/// phi(u) - phi(P[u - alpha d]) >= sigma * alpha * (g~ . d), otherwise fit a
/// parabola through phi(u), its slope and phi at alpha; halve when the fit is
/// not a clear decrease.
inline StepsizeResult pn_stepsize(const DualBoxQP& qp, std::span<const double> u, std::span<const double> d,
                                  double sigma = 0.05) {
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0; }))
        throw std::invalid_argument("pn_stepsize: zero direction");
    const Vector g = qp.gradient(u);
    const double slope = detail::dot(qp.corrected_gradient(u, g, d), d);
    const double f0 = qp.value(u);

    StepsizeResult res;
    double alpha = 1;
    for (;;) {
        if (alpha < 1e-16) throw SolverError("pn_stepsize: step underflow, direction is not a descent direction");
        const double fa = qp.value(qp.step(u, d, alpha));
        ++res.evaluations;
        if (f0 - fa >= sigma * alpha * slope) {
            res.alpha = alpha;
            res.value = fa;
            return res;
        }
        double next = slope * alpha * alpha / (2 * (fa - f0 + slope * alpha));
        if (!(next > 0) || next > 0.9 * alpha) next = 0.5 * alpha;
        alpha = next;
    }
}

/// Projected Newton solver for weighted TV-L1.
inline ProxResult prox_tv1d_l1_pn(const Signal& y, const WeightVector& w, const SolverOptions& opts = {}) {
    opts.validate();
    w.check_length(y.size());
    detail::Stopwatch clock;
    const std::size_t n = y.size();
    SolverReport rep;
    rep.solver = "pn";
    auto finish = [&](Vector u) {
        Vector x = primal_from_dual(y, u);
        rep.duality_gap = dual_gap_l1(u, y, w);
        rep.objective = tv_objective(x, y, w, 1.0);
        rep.wall_time = clock.elapsed();
        return ProxResult{Signal(std::move(x)), rep, DualVector(std::move(u))};
    };
    if (n <= 1) return finish({});

    const std::size_t m = n - 1;
    DualBoxQP qp(y, w);

    // Unconstrained minimizer; if it is box feasible it is the answer.
    Vector u = diff_apply(y);
    factor_ddt(m).solve(u);
    rep.inner_steps += m;
    bool feasible = true;
    for (std::size_t i = 0; i < m; ++i) feasible = feasible && std::abs(u[i]) <= w[i];
    if (feasible) return finish(std::move(u));
    qp.project(u);

    rep.converged = false;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        const double gap = dual_gap_l1(u, y, w);
        rep.inner_steps += m;
        if (gap <= opts.gap_tol) {
            rep.converged = true;
            break;
        }
        ++rep.iterations;
        const Vector g = qp.gradient(u);
        const ActiveSet act = ActiveSet::select(u, g, w);
        const auto free = act.free_indices();
        if (free.empty()) break;  // stationary up to eps but the gap disagrees; give up

        Vector rhs(free.size());
        for (std::size_t j = 0; j < free.size(); ++j) rhs[j] = g[free[j]];
        const Vector dfree = reduced_hessian_solve(act, rhs);
        Vector d(m, 0.0);
        for (std::size_t j = 0; j < free.size(); ++j) d[free[j]] = dfree[j];
        rep.inner_steps += m + free.size();

        // Fall back to the projected gradient when clipping kills the descent.
        if (detail::dot(qp.corrected_gradient(u, g, d), d) <= 0) {
            d = qp.corrected_gradient(u, g, g);
            if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0; })) break;
        }
        StepsizeResult step;
        try {
            step = pn_stepsize(qp, u, d);
        } catch (const SolverError&) {
            break;  // no representable decrease left: roundoff floor
        }
        rep.inner_steps += step.evaluations * m;
        u = qp.step(u, d, step.alpha);
    }
    if (!rep.converged) rep.converged = dual_gap_l1(u, y, w) <= opts.gap_tol;
    return finish(std::move(u));
}

}  // namespace tvprox
