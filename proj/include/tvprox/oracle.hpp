#pragma once

// Slow reference solvers for small problems. Nothing here calls the
// production solvers: the regularizer is written as a sum of weighted norms
// of sparse linear maps, the dual is solved by accelerated projected
// gradient with its own projections, and the answer is certified by the
// duality gap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace tvprox {

struct OracleResult {
    Vector x;
    double gap = std::numeric_limits<double>::infinity();  // relative to max(1, objective)
    double objective = 0;
    std::size_t iterations = 0;
    bool certified = false;
};

struct OracleOptions {
    std::size_t max_iter = 2'000'000;
    double target_gap = 1e-12;
    double certify_gap = 1e-10;
    std::size_t restarts = 20;
    double agreement = 1e-8;
    unsigned seed = 12345;
};

/// weight * ||B x||_p with B given as sparse rows of (index, coefficient).
struct PenaltyGroup {
    double weight = 0;
    double p = 1;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
};

/// Sum of penalty groups over vectors of length n.
class RegularizerSum {
public:
    explicit RegularizerSum(std::size_t n) : n_(n) {}

    std::size_t size() const noexcept { return n_; }
    const std::vector<PenaltyGroup>& groups() const noexcept { return groups_; }

    RegularizerSum& add(PenaltyGroup g) {
        if (!(g.weight >= 0) || !(g.p >= 1)) throw std::invalid_argument("RegularizerSum: need weight >= 0, p >= 1");
        for (const auto& row : g.rows)
            for (const auto& [i, c] : row)
                if (i >= n_) throw std::invalid_argument("RegularizerSum: row index out of range");
        if (g.weight > 0 && !g.rows.empty()) groups_.push_back(std::move(g));
        return *this;
    }

    /// weight * ||x_{i_{k+1}} - x_{i_k}||_p over a chain of indices.
    RegularizerSum& add_chain(const std::vector<std::size_t>& chain, double weight, double p) {
        PenaltyGroup g{weight, p, {}};
        for (std::size_t k = 0; k + 1 < chain.size(); ++k) g.rows.push_back({{chain[k + 1], 1.0}, {chain[k], -1.0}});
        return add(std::move(g));
    }

    /// Chain with one weight per edge (each edge is its own group).
    RegularizerSum& add_weighted_chain(const std::vector<std::size_t>& chain, std::span<const double> weights) {
        if (weights.size() + 1 != chain.size()) throw std::invalid_argument("RegularizerSum: weight count");
        for (std::size_t k = 0; k + 1 < chain.size(); ++k)
            add(PenaltyGroup{weights[k], 1.0, {{{chain[k + 1], 1.0}, {chain[k], -1.0}}}});
        return *this;
    }

    /// weight * ||x||_1
    RegularizerSum& add_l1(double weight) {
        PenaltyGroup g{weight, 1.0, {}};
        for (std::size_t i = 0; i < n_; ++i) g.rows.push_back({{i, 1.0}});
        return add(std::move(g));
    }

    double value(std::span<const double> x) const {
        double s = 0;
        for (const auto& g : groups_) {
            std::vector<double> bx;
            for (const auto& row : g.rows) {
                double v = 0;
                for (const auto& [i, c] : row) v += c * x[i];
                bx.push_back(v);
            }
            s += g.weight * norm(bx, g.p);
        }
        return s;
    }

    static double norm(std::span<const double> v, double p) {
        double m = 0;
        for (double a : v) m = std::max(m, std::abs(a));
        if (m == 0 || std::isinf(p)) return m;
        double s = 0;
        for (double a : v) s += std::pow(std::abs(a) / m, p);
        return m * std::pow(s, 1 / p);
    }

private:
    std::size_t n_;
    std::vector<PenaltyGroup> groups_;
};

namespace oracle_detail {

inline double conjugate(double p) {
    if (p == 1) return std::numeric_limits<double>::infinity();
    if (std::isinf(p)) return 1;
    return p / (p - 1);
}

inline void project_box(std::span<double> v, double r) {
    for (double& a : v) a = std::clamp(a, -r, r);
}

/// Box projection one coordinate at a time by bisection on the derivative
/// of 1/2 (t - a)^2 over [-r, r]. Only used to cross-check project_box.
inline void project_box_bisection(std::span<double> v, double r) {
    for (double& a : v) {
        double lo = -r, hi = r;
        for (int it = 0; it < 200 && lo < hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            (mid - a < 0 ? lo : hi) = mid;
        }
        a = a <= -r ? -r : a >= r ? r : 0.5 * (lo + hi);
    }
}

inline void project_l2(std::span<double> v, double r) {
    double s = 0;
    for (double a : v) s += a * a;
    s = std::sqrt(s);
    if (s > r)
        for (double& a : v) a *= r / s;
}

/// l1 ball by bisection on the soft threshold.
inline void project_l1(std::span<double> v, double r) {
    double s = 0, hi = 0;
    for (double a : v) {
        s += std::abs(a);
        hi = std::max(hi, std::abs(a));
    }
    if (s <= r) return;
    double lo = 0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        double t = 0;
        for (double a : v) t += std::max(std::abs(a) - mid, 0.0);
        (t > r ? lo : hi) = mid;
    }
    const double tau = 0.5 * (lo + hi);
    for (double& a : v) a = std::copysign(std::max(std::abs(a) - tau, 0.0), a);
}

/// lq ball, 1 < q < inf, by nested bisection on the KKT system
/// t_i + mu q t_i^{q-1} = |v_i|, sum t_i^q = r^q.
inline void project_lq_bisection(std::span<double> v, double r, double q) {
    if (RegularizerSum::norm(v, q) <= r) return;
    auto coord = [q](double a, double mu) {
        double lo = 0, hi = a;
        for (int it = 0; it < 200; ++it) {
            const double t = 0.5 * (lo + hi);
            if (t == lo || t == hi) break;
            (t + mu * q * std::pow(t, q - 1) > a ? hi : lo) = t;
        }
        return 0.5 * (lo + hi);
    };
    auto mass = [&](double mu) {
        double s = 0;
        for (double a : v) s += std::pow(coord(std::abs(a), mu), q);
        return s;
    };
    const double target = std::pow(r, q);
    double lo = 0, hi = 1;
    while (mass(hi) > target) hi *= 2;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (mass(mid) > target ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);
    for (double& a : v) a = std::copysign(coord(std::abs(a), mu), a);
}

inline void project_dual_ball(std::span<double> v, double r, double q) {
    if (std::isinf(q)) project_box(v, r);
    else if (q == 1) project_l1(v, r);
    else if (q == 2) project_l2(v, r);
    else project_lq_bisection(v, r, q);
}

/// The stacked map B of all groups in compressed row form.
struct StackedRows {
    std::vector<std::size_t> start, col;
    std::vector<double> val;
    std::vector<std::size_t> group_begin;  // row range of each group
    std::size_t n = 0;

    explicit StackedRows(const RegularizerSum& reg) : n(reg.size()) {
        start.push_back(0);
        for (const auto& g : reg.groups()) {
            group_begin.push_back(start.size() - 1);
            for (const auto& row : g.rows) {
                for (const auto& [i, c] : row) {
                    col.push_back(i);
                    val.push_back(c);
                }
                start.push_back(col.size());
            }
        }
        group_begin.push_back(start.size() - 1);
    }
    std::size_t rows() const { return start.size() - 1; }

    void apply(std::span<const double> x, std::span<double> out) const {
        for (std::size_t r = 0; r < rows(); ++r) {
            double s = 0;
            for (std::size_t k = start[r]; k < start[r + 1]; ++k) s += val[k] * x[col[k]];
            out[r] = s;
        }
    }
    /// out = y - B^T u
    void primal(std::span<const double> y, std::span<const double> u, std::span<double> out) const {
        std::copy(y.begin(), y.end(), out.begin());
        for (std::size_t r = 0; r < rows(); ++r)
            for (std::size_t k = start[r]; k < start[r + 1]; ++k) out[col[k]] -= val[k] * u[r];
    }
    /// ||B||^2 <= ||B||_1 ||B||_inf
    double lipschitz() const {
        std::vector<double> colsum(n, 0.0);
        double rowmax = 0;
        for (std::size_t r = 0; r < rows(); ++r) {
            double s = 0;
            for (std::size_t k = start[r]; k < start[r + 1]; ++k) {
                s += std::abs(val[k]);
                colsum[col[k]] += std::abs(val[k]);
            }
            rowmax = std::max(rowmax, s);
        }
        const double colmax = colsum.empty() ? 0 : *std::max_element(colsum.begin(), colsum.end());
        return std::max(rowmax * colmax, 1e-300);
    }
};

struct DualRun {
    Vector x, u;
    double primal = 0, dual = 0;
    std::size_t iterations = 0;
};

inline double half_sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += 0.5 * (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

inline double relative_gap(const DualRun& r) { return (r.primal - r.dual) / std::max(1.0, std::abs(r.primal)); }

/// For p = 1 groups, fixes saturated dual rows at their bound and projects
/// the rest of the primal onto {B_free x = 0}, which is exact once the
/// saturation pattern is right. Handles difference rows and single-entry
/// rows; anything else leaves x untouched.
inline Vector polish(const RegularizerSum& reg, const StackedRows& B, std::span<const double> y,
                     std::span<const double> u) {
    const std::size_t n = y.size();
    Vector c(y.begin(), y.end());
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::vector<bool> zeroed(n, false);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    const auto& groups = reg.groups();
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const bool box = groups[g].p == 1 || groups[g].rows.size() == 1;
        if (!box) return {};
        const double w = groups[g].weight;
        for (std::size_t r = B.group_begin[g]; r < B.group_begin[g + 1]; ++r) {
            const std::size_t len = B.start[r + 1] - B.start[r];
            const std::size_t k0 = B.start[r];
            if (std::abs(u[r]) >= w * (1 - 1e-9)) {
                const double ur = std::copysign(w, u[r]);
                for (std::size_t k = k0; k < B.start[r + 1]; ++k) c[B.col[k]] -= B.val[k] * ur;
            } else if (len == 1) {
                zeroed[B.col[k0]] = true;
            } else if (len == 2 && B.val[k0] == -B.val[k0 + 1]) {
                parent[find(B.col[k0])] = find(B.col[k0 + 1]);
            } else {
                return {};
            }
        }
    }
    std::vector<double> sum(n, 0.0);
    std::vector<std::size_t> count(n, 0);
    std::vector<bool> zero_root(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        sum[r] += c[i];
        ++count[r];
        if (zeroed[i]) zero_root[r] = true;
    }
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        x[i] = zero_root[r] ? 0.0 : sum[r] / static_cast<double>(count[r]);
    }
    return x;
}

/// Accelerated projected gradient on the dual
///   min_u 1/2 ||y - B^T u||^2  s.t.  ||u_g||_q <= weight_g
/// with momentum restarts. The primal is x = y - B^T u.
inline DualRun solve_dual(const RegularizerSum& reg, const StackedRows& B, std::span<const double> y, Vector u,
                          const OracleOptions& o) {
    const std::size_t m = B.rows(), n = y.size();
    const auto& groups = reg.groups();
    auto project = [&](Vector& v) {
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const std::span<double> part(v.data() + B.group_begin[g], B.group_begin[g + 1] - B.group_begin[g]);
            project_dual_ball(part, groups[g].weight, conjugate(groups[g].p));
        }
    };
    const double dual_const = 0.5 * std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
    auto evaluate = [&](const Vector& uu, DualRun& run) {
        run.x.resize(n);
        B.primal(y, uu, run.x);
        const double half = 0.5 * std::inner_product(run.x.begin(), run.x.end(), run.x.begin(), 0.0);
        run.dual = dual_const - half;
        run.primal = half_sq_dist(run.x, y) + reg.value(run.x);
        run.u = uu;
    };

    project(u);
    DualRun best;
    evaluate(u, best);
    if (m == 0) return best;

    const double step = 1 / B.lipschitz();
    Vector v = u, prev = u, xv(n), grad(m);
    double t = 1;
    std::size_t it = 0;
    for (; it < o.max_iter; ++it) {
        B.primal(y, v, xv);
        B.apply(xv, grad);  // minus the gradient
        prev = u;
        for (std::size_t r = 0; r < m; ++r) u[r] = v[r] + step * grad[r];
        project(u);
        double restart = 0;
        for (std::size_t r = 0; r < m; ++r) restart += (v[r] - u[r]) * (u[r] - prev[r]);
        if (restart > 0) {
            t = 1;
            v = u;
        } else {
            const double tn = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
            for (std::size_t r = 0; r < m; ++r) v[r] = u[r] + (t - 1) / tn * (u[r] - prev[r]);
            t = tn;
        }
        if (it % 50 == 49) {
            DualRun cur;
            evaluate(u, cur);
            if (cur.primal - cur.dual < best.primal - best.dual) best = cur;
            if (relative_gap(best) <= o.target_gap) break;
        }
    }
    best.iterations = it;
    // the polished primal only needs a better objective to tighten the gap
    Vector xp = polish(reg, B, y, best.u);
    if (!xp.empty()) {
        const double pp = half_sq_dist(xp, y) + reg.value(xp);
        if (pp < best.primal) {
            best.primal = pp;
            best.x = std::move(xp);
        }
    }
    return best;
}

}  // namespace oracle_detail

/// argmin_x 1/2 ||x - y||^2 + reg(x), checked over several random dual
/// starts. Certified when every run reaches the gap threshold and all
/// objectives agree.
inline OracleResult oracle_joint_prox(std::span<const double> y, const RegularizerSum& reg,
                                      const OracleOptions& o = {}) {
    if (y.size() != reg.size()) throw std::invalid_argument("oracle_joint_prox: size mismatch");
    if (y.size() > 64) throw std::invalid_argument("oracle_joint_prox: meant for at most 64 entries");
    const oracle_detail::StackedRows B(reg);
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> normal;
    double scale = 1;
    for (double v : y) scale = std::max(scale, std::abs(v));

    OracleResult res;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, worst_gap = 0;
    oracle_detail::DualRun best;
    best.primal = std::numeric_limits<double>::infinity();
    const std::size_t runs = std::max<std::size_t>(1, o.restarts);
    for (std::size_t k = 0; k < runs; ++k) {
        Vector u0(B.rows(), 0.0);
        if (k > 0)
            for (double& v : u0) v = scale * normal(rng);
        auto run = oracle_detail::solve_dual(reg, B, y, std::move(u0), o);
        res.iterations += run.iterations;
        lo = std::min(lo, run.primal);
        hi = std::max(hi, run.primal);
        worst_gap = std::max(worst_gap, oracle_detail::relative_gap(run));
        if (run.primal < best.primal) best = std::move(run);
    }
    res.x = std::move(best.x);
    res.objective = best.primal;
    res.gap = worst_gap;
    res.certified = worst_gap <= o.certify_gap && hi - lo <= o.agreement * std::max(1.0, std::abs(lo));
    return res;
}

/// 1D TV prox reference for n <= 256, any p >= 1. Per-edge weights need p = 1.
inline OracleResult oracle_tv1d_dual_qp(const Signal& y, const WeightVector& w, double p,
                                        const OracleOptions& o = {}) {
    const std::size_t n = y.size();
    if (n > 256) throw std::invalid_argument("oracle_tv1d_dual_qp: meant for n <= 256");
    if (!(p >= 1)) throw std::invalid_argument("oracle_tv1d_dual_qp: p must be >= 1");
    w.check_length(n);
    RegularizerSum reg(n);
    std::vector<std::size_t> chain(n);
    std::iota(chain.begin(), chain.end(), std::size_t{0});
    if (w.is_uniform()) {
        reg.add_chain(chain, w.uniform_value(), p);
    } else {
        if (p != 1) throw std::invalid_argument("oracle_tv1d_dual_qp: per-edge weights need p = 1");
        reg.add_weighted_chain(chain, w.expand(n ? n - 1 : 0));
    }
    const oracle_detail::StackedRows B(reg);
    auto run = oracle_detail::solve_dual(reg, B, y.values(), Vector(B.rows(), 0.0), o);
    OracleResult res;
    res.gap = oracle_detail::relative_gap(run);
    res.objective = run.primal;
    res.iterations = run.iterations;
    res.x = std::move(run.x);
    res.certified = res.gap <= o.certify_gap;
    return res;
}

}  // namespace tvprox
