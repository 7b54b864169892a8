#pragma once

// Anisotropic TV prox on matrices and tensors: one 1D prox per fiber,
// axes combined by proximity stacking.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "combiners.hpp"
#include "core.hpp"
#include "tensor.hpp"
#include "thread_pool.hpp"
#include "tv1d.hpp"

namespace tvprox {

/// A 1D solve that failed on one fiber.
class FiberError : public SolverError {
public:
    FiberError(std::size_t axis, Dims index, const std::string& what)
        : SolverError("fiber " + describe(axis, index) + ": " + what), axis_(axis), index_(std::move(index)) {}

    std::size_t axis() const noexcept { return axis_; }
    /// Multi-index of the fiber's first entry (the axis coordinate is 0).
    const Dims& index() const noexcept { return index_; }

private:
    static std::string describe(std::size_t axis, const Dims& index) {
        std::string s = "(";
        for (std::size_t j = 0; j < index.size(); ++j) {
            if (j) s += ",";
            s += j == axis ? std::string(":") : std::to_string(index[j]);
        }
        return s + ")";
    }
    std::size_t axis_;
    Dims index_;
};

/// Counters shared by the fiber solves of one top-level call.
struct FiberStats {
    std::atomic<std::size_t> inner_steps{0};
    std::atomic<std::size_t> unconverged{0};
};

/// Applies the 1D prox of `pen` (scaled by `scale`) to every fiber of X along
/// axis k. Fibers run on opts.workers threads and each writes only its own
/// entries, so the output does not depend on the worker count.
inline TensorND axis_prox(const TensorND& X, std::size_t k, const AxisPenalty& pen, const SolverOptions& opts = {},
                          Tv1dSolver solver = Tv1dSolver::automatic, double scale = 1.0,
                          FiberStats* stats = nullptr) {
    opts.validate();
    if (k >= X.ndim()) throw std::invalid_argument("axis_prox: axis out of range");
    if (!(pen.lambda >= 0) || !(pen.p >= 1)) throw std::invalid_argument("axis_prox: need lambda >= 0 and p >= 1");
    TensorND out = X;
    if (pen.is_zero() || scale == 0 || X.dim(k) == 1) return out;

    const FiberSet fibers(X.dims(), k);
    std::optional<FiberSet> weight_fibers;
    if (pen.weights) {
        AxisSpec check;
        check.axes.assign(X.ndim(), AxisPenalty{});
        check.axes[k] = pen;
        check.validate(X.dims());
        weight_fibers.emplace(pen.weights->dims(), k);
    }
    const std::span<const double> in = X.data();
    const std::span<double> dst = out.data();
    auto body = [&](std::size_t f) {
        const FiberView fv = fibers[f];
        const Signal y(fv.gather(in));
        WeightVector w = WeightVector::uniform(0);
        if (weight_fibers) {
            Vector wv = (*weight_fibers)[f].gather(pen.weights->data());
            for (double& v : wv) v *= scale;
            w = WeightVector::per_edge(std::move(wv));
        } else {
            w = WeightVector::uniform(pen.lambda * scale);
        }
        try {
            const ProxResult r = prox_tv1d(y, w, pen.p, solver, opts);
            fv.scatter(r.x.values(), dst);
            if (stats) {
                stats->inner_steps += r.report.inner_steps;
                if (!r.report.converged) ++stats->unconverged;
            }
        } catch (const std::exception& e) {
            throw FiberError(k, X.unravel(fv.offset), e.what());
        }
    };
    rethrow(shared_pool(opts.workers).parallel_for(fibers.size(), body));
    return out;
}

struct TensorResult {
    TensorND x;
    SolverReport report;
};

namespace detail {

inline ProxOperator axis_operator(const Dims& dims, std::size_t k, const AxisPenalty& pen, const SolverOptions& opts,
                                  Tv1dSolver solver, std::shared_ptr<FiberStats> stats) {
    // An inexact inner prox keeps the outer iterate moving by about
    // sqrt(2 gap), so the fiber gap must sit well below stop_tol squared.
    // Gaps under 1e-14 are not reachable in double precision.
    SolverOptions inner = opts;
    inner.gap_tol = std::max(std::min(opts.gap_tol, opts.stop_tol * opts.stop_tol), 1e-14);
    ProxOperator op;
    op.name = "axis" + std::to_string(k);
    op.map = [dims, k, pen, inner, solver, stats](std::span<const double> v, double scale) {
        TensorND t(dims, Vector(v.begin(), v.end()));
        return axis_prox(t, k, pen, inner, solver, scale, stats.get()).data();
    };
    op.penalty = [dims, k, pen](std::span<const double> v) {
        const FiberSet fibers(dims, k);
        std::optional<FiberSet> wf;
        if (pen.weights) wf.emplace(pen.weights->dims(), k);
        double s = 0;
        for (std::size_t f = 0; f < fibers.size(); ++f) {
            const Vector x = fibers[f].gather(v);
            const WeightVector w = wf ? WeightVector::per_edge((*wf)[f].gather(pen.weights->data()))
                                      : WeightVector::uniform(pen.lambda);
            s += tv_penalty(x, w, pen.p);
        }
        return s;
    };
    return op;
}

/// `order` lists the axes in the order their operators reach the combiner
/// (ascending when empty).
inline TensorResult run_axes(const TensorND& Y, const AxisSpec& spec, Combiner combiner, const SolverOptions& opts,
                             Tv1dSolver solver, std::vector<std::size_t> order = {}) {
    spec.validate(Y.dims());
    detail::Stopwatch clock;
    auto stats = std::make_shared<FiberStats>();
    std::vector<ProxOperator> ops;
    std::vector<std::size_t> axes;
    if (order.empty())
        for (std::size_t k = 0; k < spec.size(); ++k) order.push_back(k);
    for (std::size_t k : order) {
        if (spec[k].is_zero() || Y.dim(k) == 1) continue;
        ops.push_back(axis_operator(Y.dims(), k, spec[k], opts, solver, stats));
        axes.push_back(k);
    }

    TensorResult res{Y, {}};
    if (ops.empty()) {
        res.report.solver = "none";
        res.report.objective = 0;
        res.report.wall_time = clock.elapsed();
        return res;
    }
    if (ops.size() == 1) {
        res.x = axis_prox(Y, axes[0], spec[axes[0]], opts, solver, 1.0, stats.get());
        res.report.solver = "axis";
        res.report.iterations = 1;
        res.report.objective = 0;
        for (std::size_t i = 0; i < Y.size(); ++i) res.report.objective += 0.5 * std::pow(res.x[i] - Y[i], 2);
        res.report.objective += ops[0].penalty(res.x.data());
    } else {
        // the operators parallelize over fibers themselves
        SolverOptions outer = opts;
        outer.workers = 1;
        CombinerResult c;
        switch (combiner) {
            case Combiner::pd:
            case Combiner::dr:
                if (ops.size() != 2)
                    throw std::invalid_argument("combiner '" + to_string(combiner) +
                                                "' needs exactly two active axes; use ppd or admm");
                c = combiner == Combiner::pd ? combine_pd(Y.data(), ops[0], ops[1], outer)
                                             : combine_dr(Y.data(), ops[0], ops[1], outer);
                break;
            case Combiner::ppd: c = combine_ppd(Y.data(), ops, outer); break;
            case Combiner::admm: c = combine_admm(Y.data(), ops, outer); break;
        }
        res.x = TensorND(Y.dims(), std::move(c.x));
        res.report = std::move(c.report);
    }
    res.report.inner_steps = stats->inner_steps;
    if (stats->unconverged) res.report.converged = false;
    res.report.duality_gap = std::numeric_limits<double>::quiet_NaN();
    res.report.wall_time = clock.elapsed();
    return res;
}

}  // namespace detail

/// Matrix TV with row penalty (λ_r, p) and column penalty (λ_c, q).
/// Rows are the fibers along axis 1, columns those along axis 0; the row
/// term is the first operator handed to the combiner.
inline TensorResult prox_tv2d(const TensorND& Y, AxisPenalty rows, AxisPenalty cols, Combiner combiner = Combiner::dr,
                              const SolverOptions& opts = {}, Tv1dSolver solver = Tv1dSolver::automatic) {
    if (Y.ndim() != 2) throw std::invalid_argument("prox_tv2d: expected a 2D tensor, got dims " + dims_string(Y.dims()));
    return detail::run_axes(Y, AxisSpec{std::move(cols), std::move(rows)}, combiner, opts, solver, {1, 0});
}

/// Tensor TV with one penalty per axis. PPD by default; PD and DR only when
/// exactly two axes carry a penalty.
inline TensorResult prox_tvnd(const TensorND& Y, const AxisSpec& spec, Combiner combiner = Combiner::ppd,
                              const SolverOptions& opts = {}, Tv1dSolver solver = Tv1dSolver::automatic) {
    return detail::run_axes(Y, spec, combiner, opts, solver);
}

}  // namespace tvprox
