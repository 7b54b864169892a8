#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tvprox {

using Vector = std::vector<double>;

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

/// Thrown when an iterative method cannot make progress for reasons other
/// than running out of iterations (those are reported, not thrown).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Owned 1D sequence of finite samples.
class Signal {
public:
    Signal() = default;
    Signal(std::initializer_list<double> v) : values_(v) { check(); }
    explicit Signal(Vector v) : values_(std::move(v)) { check(); }

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    const Vector& vector() const noexcept { return values_; }
    operator std::span<const double>() const noexcept { return values_; }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

private:
    void check() const {
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("Signal: non-finite sample");
    }
    Vector values_;
};

/// Per-difference penalties. Uniform(λ) behaves as w_i = λ for every edge.
class WeightVector {
public:
    static WeightVector uniform(double lambda) {
        if (!(lambda >= 0) || !std::isfinite(lambda))
            throw std::invalid_argument("WeightVector: lambda must be finite and >= 0");
        WeightVector w;
        w.lambda_ = lambda;
        return w;
    }
    static WeightVector per_edge(Vector weights) {
        for (double v : weights)
            if (!(v >= 0) || !std::isfinite(v))
                throw std::invalid_argument("WeightVector: weights must be finite and >= 0");
        WeightVector w;
        w.uniform_ = false;
        w.weights_ = std::move(weights);
        return w;
    }

    bool is_uniform() const noexcept { return uniform_; }
    double uniform_value() const {
        if (!uniform_) throw std::logic_error("WeightVector: not uniform");
        return lambda_;
    }
    double operator[](std::size_t i) const { return uniform_ ? lambda_ : weights_[i]; }

    /// Per-edge weights need exactly n-1 entries; uniform weights fit any n.
    void check_length(std::size_t n) const {
        if (!uniform_ && weights_.size() + 1 != n && !(n == 0 && weights_.empty()))
            throw std::invalid_argument("WeightVector: expected " + std::to_string(n ? n - 1 : 0) +
                                        " weights, got " + std::to_string(weights_.size()));
    }
    Vector expand(std::size_t edges) const {
        if (uniform_) return Vector(edges, lambda_);
        return weights_;
    }
    double max() const {
        if (uniform_) return lambda_;
        double m = 0;
        for (double v : weights_) m = std::max(m, v);
        return m;
    }

private:
    WeightVector() = default;
    bool uniform_ = true;
    double lambda_ = 0;
    Vector weights_;
};

/// Dual variable of length n-1. Iterates may be infeasible, so feasibility is a query.
class DualVector {
public:
    DualVector() = default;
    explicit DualVector(Vector v) : values_(std::move(v)) {}
    explicit DualVector(std::size_t m) : values_(m, 0.0) {}

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    Vector& vector() noexcept { return values_; }
    const Vector& vector() const noexcept { return values_; }
    operator std::span<const double>() const noexcept { return values_; }

    bool box_feasible(const WeightVector& w, double tol = 0.0) const {
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (std::abs(values_[i]) > w[i] + tol) return false;
        return true;
    }

private:
    Vector values_;
};

enum class Combiner { pd, ppd, dr, admm };

struct SolverOptions {
    double gap_tol = 1e-5;
    double boundary_tol = 1e-6;
    std::size_t max_iter = 10000;
    double hybrid_exponent = 1.05;
    std::size_t fw_gp_ratio = 10;
    std::size_t workers = 1;
    // combiners
    double stop_tol = 1e-6;
    double admm_rho = 1.0;

    void validate() const {
        if (!(gap_tol > 0)) throw std::invalid_argument("SolverOptions: gap_tol must be > 0");
        if (!(boundary_tol > 0)) throw std::invalid_argument("SolverOptions: boundary_tol must be > 0");
        if (!(hybrid_exponent > 1 && hybrid_exponent < 2))
            throw std::invalid_argument("SolverOptions: hybrid_exponent must lie in (1,2)");
        if (fw_gp_ratio < 1) throw std::invalid_argument("SolverOptions: fw_gp_ratio must be >= 1");
        if (!(stop_tol > 0)) throw std::invalid_argument("SolverOptions: stop_tol must be > 0");
        if (!(admm_rho > 0)) throw std::invalid_argument("SolverOptions: admm_rho must be > 0");
    }
};

struct SolverReport {
    std::string solver;
    std::size_t iterations = 0;
    std::size_t inner_steps = 0;
    double duality_gap = 0;
    double objective = 0;
    bool converged = true;
    std::chrono::nanoseconds wall_time{0};
};

struct ProxResult {
    Signal x;
    SolverReport report;
    DualVector dual;  // empty for solvers that never form the dual
};

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    std::chrono::nanoseconds elapsed() const {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                                    start_);
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_p(std::span<const double> v, double p) {
    if (std::isinf(p)) {
        double m = 0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
    if (p == 1) {
        double s = 0;
        for (double x : v) s += std::abs(x);
        return s;
    }
    if (p == 2) return std::sqrt(dot(v, v));
    // scale by the max entry so large p does not overflow
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    if (m == 0) return 0;
    double s = 0;
    for (double x : v) s += std::pow(std::abs(x) / m, p);
    return m * std::pow(s, 1.0 / p);
}

/// Hölder conjugate exponent: 1 <-> inf, p <-> p/(p-1).
inline double conjugate_exponent(double p) {
    if (std::isinf(p)) return 1.0;
    if (p == 1) return kInfNorm;
    return p / (p - 1);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline void check_p(double p) {
    if (!(p >= 1)) throw std::invalid_argument("p must be >= 1 (or infinity)");
}

}  // namespace detail

/// (Dx)_i = x_{i+1} - x_i.
inline Vector diff_apply(std::span<const double> x) {
    if (x.size() < 2) return {};
    Vector d(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
    return d;
}

/// Exact adjoint of diff_apply: out_0 = -u_0, out_i = u_{i-1} - u_i, out_{n-1} = u_{n-2}.
inline Vector diff_transpose_apply(std::span<const double> u, std::size_t n) {
    if (n == 0 || u.size() + 1 != n)
        throw std::invalid_argument("diff_transpose_apply: dual length must be n-1");
    Vector out(n, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        out[i] -= u[i];
        out[i + 1] += u[i];
    }
    return out;
}

inline Vector cumsum(std::span<const double> y) {
    Vector r(y.size());
    std::partial_sum(y.begin(), y.end(), r.begin());
    return r;
}

/// Primal x = y - D^T u.
inline Vector primal_from_dual(std::span<const double> y, std::span<const double> u) {
    Vector x(y.begin(), y.end());
    for (std::size_t i = 0; i < u.size(); ++i) {
        x[i] += u[i];
        x[i + 1] -= u[i];
    }
    return x;
}

/// Inverse of primal_from_dual: u_i = sum_{k<=i} (x_k - y_k).
inline DualVector dual_from_primal(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("dual_from_primal: length mismatch");
    DualVector u(x.empty() ? 0 : x.size() - 1);
    double acc = 0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        acc += x[i] - y[i];
        u[i] = acc;
    }
    return u;
}

/// TV penalty alone: sum w_i |dx_i| for p = 1, lambda * ||Dx||_p otherwise.
inline double tv_penalty(std::span<const double> x, const WeightVector& w, double p) {
    detail::check_p(p);
    const Vector d = diff_apply(x);
    if (p == 1) {
        w.check_length(x.size());
        double s = 0;
        for (std::size_t i = 0; i < d.size(); ++i) s += w[i] * std::abs(d[i]);
        return s;
    }
    if (!w.is_uniform())
        throw std::invalid_argument("per-edge weights are only supported for p = 1");
    return w.uniform_value() * detail::norm_p(d, p);
}

/// prox of t ||.||_1, in place.
inline void soft_threshold(std::span<double> v, double t) {
    for (double& a : v) a = std::copysign(std::max(std::abs(a) - t, 0.0), a);
}

/// 1/2 ||x - y||^2 + TV penalty.
inline double tv_objective(std::span<const double> x, std::span<const double> y, const WeightVector& w,
                           double p) {
    if (x.size() != y.size()) throw std::invalid_argument("tv_objective: length mismatch");
    double q = 0;
    for (std::size_t i = 0; i < x.size(); ++i) q += 0.5 * (x[i] - y[i]) * (x[i] - y[i]);
    return q + tv_penalty(x, w, p);
}

/// Duality gap of the weighted TV-L1 prox at dual point u (clipped into the box first).
/// Equals sum_i (w_i |(Dx)_i| - u_i (Dx)_i) with x = y - D^T u.
inline double dual_gap_l1(std::span<const double> u, std::span<const double> y, const WeightVector& w) {
    if (y.empty()) return 0;
    if (u.size() + 1 != y.size()) throw std::invalid_argument("dual_gap_l1: dual length must be n-1");
    w.check_length(y.size());
    Vector uc(u.begin(), u.end());
    for (std::size_t i = 0; i < uc.size(); ++i) uc[i] = std::clamp(uc[i], -w[i], w[i]);
    const Vector x = primal_from_dual(y, uc);
    double gap = 0;
    for (std::size_t i = 0; i < uc.size(); ++i) {
        const double dx = x[i + 1] - x[i];
        gap += w[i] * std::abs(dx) - uc[i] * dx;
    }
    return gap;
}

/// Duality gap for lambda*||D x||_p, after radially scaling u into the dual q-ball.
inline double dual_gap_lp(std::span<const double> u, std::span<const double> y, double lambda, double p) {
    if (y.empty()) return 0;
    if (u.size() + 1 != y.size()) throw std::invalid_argument("dual_gap_lp: dual length must be n-1");
    const double q = detail::conjugate_exponent(p);
    Vector us(u.begin(), u.end());
    const double nq = detail::norm_p(us, q);
    if (nq > lambda && nq > 0)
        for (double& v : us) v *= lambda / nq;
    const Vector x = primal_from_dual(y, us);
    const Vector dx = diff_apply(x);
    return lambda * detail::norm_p(dx, p) - detail::dot(us, dx);
}

/// ||prox + dual_prox - y||_inf; zero when the pair is a Moreau decomposition of y.
inline double moreau_check(std::span<const double> prox_value, std::span<const double> dual_prox_value,
                           std::span<const double> y) {
    if (prox_value.size() != y.size() || dual_prox_value.size() != y.size())
        throw std::invalid_argument("moreau_check: length mismatch");
    double m = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        m = std::max(m, std::abs(prox_value[i] + dual_prox_value[i] - y[i]));
    return m;
}

}  // namespace tvprox
