#pragma once

// Proximity stacking: prox of r_1 + ... + r_m from the individual prox maps,
//
//     min_x 1/2 ||x - y||^2 + sum_i r_i(x).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "thread_pool.hpp"

namespace tvprox {

/// A regularizer r given through its scaled prox map
/// (v, s) -> argmin_x 1/2 ||x - v||^2 + s r(x), and optionally r itself.
/// The map must be reentrant.
struct ProxOperator {
    using Map = std::function<Vector(std::span<const double>, double)>;
    using Penalty = std::function<double(std::span<const double>)>;

    Map map;
    Penalty penalty;  // may be empty
    std::string name;

    Vector operator()(std::span<const double> v, double scale = 1.0) const { return map(v, scale); }

    /// The zero regularizer, whose prox is the identity.
    static ProxOperator zero() {
        return {[](std::span<const double> v, double) { return Vector(v.begin(), v.end()); },
                [](std::span<const double>) { return 0.0; }, "zero"};
    }
};

struct CombinerResult {
    Vector x;
    SolverReport report;
};

inline std::string to_string(Combiner c) {
    switch (c) {
        case Combiner::pd: return "pd";
        case Combiner::ppd: return "ppd";
        case Combiner::dr: return "dr";
        case Combiner::admm: return "admm";
    }
    return "?";
}

inline Combiner parse_combiner(const std::string& s) {
    if (s == "pd") return Combiner::pd;
    if (s == "ppd") return Combiner::ppd;
    if (s == "dr") return Combiner::dr;
    if (s == "admm") return Combiner::admm;
    throw std::invalid_argument("unknown combiner '" + s + "'");
}

namespace detail {

/// Combiners never form a dual, so no gap is available.
inline CombinerResult finish_combiner(std::span<const double> y, const std::vector<ProxOperator>& ops, Vector x,
                                      SolverReport rep, const Stopwatch& clock) {
    double obj = 0;
    for (std::size_t i = 0; i < x.size(); ++i) obj += 0.5 * (x[i] - y[i]) * (x[i] - y[i]);
    for (const auto& op : ops) {
        if (!op.penalty) {
            obj = std::numeric_limits<double>::quiet_NaN();
            break;
        }
        obj += op.penalty(x);
    }
    rep.objective = obj;
    rep.duality_gap = std::numeric_limits<double>::quiet_NaN();
    rep.wall_time = clock.elapsed();
    return {std::move(x), std::move(rep)};
}

inline void check_same_size(std::span<const double> a, std::span<const double> b, const char* who) {
    if (a.size() != b.size()) throw std::invalid_argument(std::string(who) + ": prox operator changed the length");
}

/// Runs all m prox maps, on the pool when workers > 1.
inline std::vector<Vector> apply_all(const std::vector<ProxOperator>& ops, const std::vector<Vector>& args,
                                     double scale, std::size_t workers) {
    std::vector<Vector> out(ops.size());
    auto body = [&](std::size_t i) { out[i] = ops[i](args[i], scale); };
    rethrow(shared_pool(workers).parallel_for(ops.size(), body));
    return out;
}

}  // namespace detail

/// Proximal Dykstra for two regularizers.
inline CombinerResult combine_pd(std::span<const double> y, const ProxOperator& r1, const ProxOperator& r2,
                                 const SolverOptions& opts = {}) {
    opts.validate();
    detail::Stopwatch clock;
    const std::size_t n = y.size();
    Vector x(y.begin(), y.end()), p(n, 0.0), q(n, 0.0), arg(n);
    SolverReport rep;
    rep.solver = "pd";
    rep.converged = false;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) arg[i] = x[i] + p[i];
        const Vector z = r2(arg);
        detail::check_same_size(z, y, "combine_pd");
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = arg[i] - z[i];
            arg[i] = z[i] + q[i];
        }
        Vector xn = r1(arg);
        detail::check_same_size(xn, y, "combine_pd");
        for (std::size_t i = 0; i < n; ++i) q[i] = arg[i] - xn[i];
        const double change = detail::max_abs_diff(xn, x);
        x = std::move(xn);
        ++rep.iterations;
        if (change <= opts.stop_tol) {
            rep.converged = true;
            break;
        }
    }
    return detail::finish_combiner(y, {r1, r2}, std::move(x), std::move(rep), clock);
}

/// Parallel-proximal Dykstra for m regularizers. The iteration averages m
/// prox maps, so each one is taken of m r_i to reach the prox of the sum.
/// The m calls of an iteration run on opts.workers threads; the average is
/// always summed in operator order, so the result does not depend on the
/// worker count.
inline CombinerResult combine_ppd(std::span<const double> y, const std::vector<ProxOperator>& ops,
                                  const SolverOptions& opts = {}) {
    opts.validate();
    if (ops.empty()) throw std::invalid_argument("combine_ppd: need at least one operator");
    detail::Stopwatch clock;
    const std::size_t n = y.size(), m = ops.size();
    Vector x(y.begin(), y.end());
    std::vector<Vector> z(m, x);
    SolverReport rep;
    rep.solver = "ppd";
    rep.converged = false;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        const auto p = detail::apply_all(ops, z, static_cast<double>(m), opts.workers);
        Vector xn(n, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            detail::check_same_size(p[k], y, "combine_ppd");
            for (std::size_t i = 0; i < n; ++i) xn[i] += p[k][i];
        }
        for (double& v : xn) v /= static_cast<double>(m);
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t i = 0; i < n; ++i) z[k][i] += xn[i] - p[k][i];
        const double change = detail::max_abs_diff(xn, x);
        x = std::move(xn);
        ++rep.iterations;
        if (change <= opts.stop_tol) {
            rep.converged = true;
            break;
        }
    }
    return detail::finish_combiner(y, ops, std::move(x), std::move(rep), clock);
}

/// Douglas-Rachford by alternating reflections on the base polytopes of r1
/// and r2 (both must be Lovász extensions, e.g. TV terms). Starts at z = y.
///
/// The extracted x can stay frozen for many iterations while z drifts along
/// a face, so a small change alone does not stop the run. Since y - x lies
/// in B1 + B2, the gap r1(x) + r2(x) - x'(y - x) is available whenever both
/// penalties are, and must also fall below stop_tol^2 max(1, objective).
inline CombinerResult combine_dr(std::span<const double> y, const ProxOperator& r1, const ProxOperator& r2,
                                 const SolverOptions& opts = {}) {
    opts.validate();
    detail::Stopwatch clock;
    const std::size_t n = y.size();
    // projections written through the prox maps
    auto proj_b2 = [&](const Vector& v) {
        Vector pr = r2(v);
        detail::check_same_size(pr, y, "combine_dr");
        for (std::size_t i = 0; i < n; ++i) pr[i] = v[i] - pr[i];
        return pr;
    };
    auto proj_b1 = [&](const Vector& v) {
        Vector arg(n);
        for (std::size_t i = 0; i < n; ++i) arg[i] = y[i] - v[i];
        Vector pr = r1(arg);
        detail::check_same_size(pr, y, "combine_dr");
        for (std::size_t i = 0; i < n; ++i) pr[i] += v[i];
        return pr;
    };
    auto extract = [&](const Vector& z) {
        const Vector b = proj_b2(z);
        Vector a = proj_b1(b);
        for (std::size_t i = 0; i < n; ++i) a[i] -= b[i];
        return a;
    };

    const bool certify = static_cast<bool>(r1.penalty) && static_cast<bool>(r2.penalty);
    auto gap_of = [&](const Vector& x, double& objective) {
        double lin = 0, fit = 0;
        for (std::size_t i = 0; i < n; ++i) {
            lin += x[i] * (y[i] - x[i]);
            fit += 0.5 * (x[i] - y[i]) * (x[i] - y[i]);
        }
        const double pen = r1.penalty(x) + r2.penalty(x);
        objective = fit + pen;
        return pen - lin;
    };

    Vector z(y.begin(), y.end());
    Vector x = extract(z);
    SolverReport rep;
    rep.solver = "dr";
    rep.converged = false;
    double gap = std::numeric_limits<double>::quiet_NaN();
    Vector refl(n);
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        const Vector b = proj_b2(z);
        for (std::size_t i = 0; i < n; ++i) refl[i] = 2 * b[i] - z[i];
        const Vector a = proj_b1(refl);
        for (std::size_t i = 0; i < n; ++i) z[i] = 0.5 * (2 * a[i] - refl[i] + z[i]);
        Vector xn = extract(z);
        const double change = detail::max_abs_diff(xn, x);
        x = std::move(xn);
        ++rep.iterations;
        if (change > opts.stop_tol) continue;
        if (!certify) {
            rep.converged = true;
            break;
        }
        double objective;
        gap = gap_of(x, objective);
        if (gap <= opts.stop_tol * opts.stop_tol * std::max(1.0, std::abs(objective))) {
            rep.converged = true;
            break;
        }
    }
    auto res = detail::finish_combiner(y, {r1, r2}, std::move(x), std::move(rep), clock);
    if (certify) {
        double objective;
        res.report.duality_gap = gap_of(res.x, objective);
    }
    return res;
}

/// Consensus ADMM: x-update, then parallel z_i = prox_{r_i/rho}(x - u_i/rho),
/// then u_i += rho (z_i - x). Starting from z_i = y the first x-update
/// returns y again, so stopping also needs every z_i to agree with x.
inline CombinerResult combine_admm(std::span<const double> y, const std::vector<ProxOperator>& ops,
                                   const SolverOptions& opts = {}) {
    opts.validate();
    if (ops.empty()) throw std::invalid_argument("combine_admm: need at least one operator");
    detail::Stopwatch clock;
    const std::size_t n = y.size(), m = ops.size();
    const double rho = opts.admm_rho;
    Vector x(y.begin(), y.end());
    std::vector<Vector> z(m, x), u(m, Vector(n, 0.0)), args(m, Vector(n));
    SolverReport rep;
    rep.solver = "admm";
    rep.converged = false;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        Vector xn(y.begin(), y.end());
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t i = 0; i < n; ++i) xn[i] += u[k][i] + rho * z[k][i];
        for (double& v : xn) v /= 1 + static_cast<double>(m) * rho;
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t i = 0; i < n; ++i) args[k][i] = xn[i] - u[k][i] / rho;
        z = detail::apply_all(ops, args, 1 / rho, opts.workers);
        for (std::size_t k = 0; k < m; ++k) {
            detail::check_same_size(z[k], y, "combine_admm");
            for (std::size_t i = 0; i < n; ++i) u[k][i] += rho * (z[k][i] - xn[i]);
        }
        double change = detail::max_abs_diff(xn, x);
        for (std::size_t k = 0; k < m; ++k) change = std::max(change, detail::max_abs_diff(z[k], xn));
        x = std::move(xn);
        ++rep.iterations;
        if (change <= opts.stop_tol) {
            rep.converged = true;
            break;
        }
    }
    return detail::finish_combiner(y, ops, std::move(x), std::move(rep), clock);
}

}  // namespace tvprox
