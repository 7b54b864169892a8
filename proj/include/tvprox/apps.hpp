#pragma once

// Application pipelines on top of the prox operators: FLSA, denoising,
// ISNR, synthetic data and the benchmark harness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "tensor.hpp"
#include "tv1d.hpp"
#include "tvnd.hpp"

namespace tvprox {

/// 1D FLSA: prox of l1 ||x||_1 + l2 TV(x), exactly soft-threshold after TV prox.
inline ProxResult flsa_1d(const Signal& y, double l1, double l2, const SolverOptions& opts = {}) {
    if (!(l1 >= 0)) throw std::invalid_argument("flsa: l1 must be >= 0");
    ProxResult r = prox_tv1d(y, WeightVector::uniform(l2), 1.0, Tv1dSolver::automatic, opts);
    Vector x = r.x.vector();
    soft_threshold(x, l1);
    r.x = Signal(std::move(x));
    r.report.objective = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        r.report.objective += 0.5 * (r.x[i] - y[i]) * (r.x[i] - y[i]) + l1 * std::abs(r.x[i]);
    r.report.objective += tv_penalty(r.x.values(), WeightVector::uniform(l2), 1.0);
    r.report.solver = "flsa(" + r.report.solver + ")";
    r.dual = {};
    return r;
}

/// 2D FLSA: 2D TV prox with l2 on rows and columns, then soft-threshold by l1.
inline TensorResult flsa_2d(const TensorND& Y, double l1, double l2, Combiner combiner = Combiner::dr,
                            const SolverOptions& opts = {}) {
    if (!(l1 >= 0)) throw std::invalid_argument("flsa_2d: l1 must be >= 0");
    TensorResult r = prox_tv2d(Y, {l2, 1}, {l2, 1}, combiner, opts);
    soft_threshold(r.x.data(), l1);
    return r;
}

/// Anisotropic TV denoising of an image (2D) or a volume/video (ND).
/// Defaults: Douglas-Rachford for two axes, parallel Dykstra otherwise.
inline TensorResult denoise(const TensorND& Y, const AxisSpec& spec, std::optional<Combiner> combiner = {},
                            const SolverOptions& opts = {}) {
    spec.validate(Y.dims());
    if (Y.ndim() == 2) return prox_tv2d(Y, spec[1], spec[0], combiner.value_or(Combiner::dr), opts);
    return prox_tvnd(Y, spec, combiner.value_or(Combiner::ppd), opts);
}

/// 10 log10(||noisy - restored||^2 / ||restored - original||^2) in dB.
/// restored == noisy gives -inf, restored == original gives +inf; all three
/// equal is undefined.
inline double isnr(std::span<const double> original, std::span<const double> noisy, std::span<const double> restored) {
    if (original.size() != noisy.size() || noisy.size() != restored.size())
        throw std::invalid_argument("isnr: inputs differ in size");
    double num = 0, den = 0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        num += (noisy[i] - restored[i]) * (noisy[i] - restored[i]);
        den += (restored[i] - original[i]) * (restored[i] - original[i]);
    }
    if (den == 0 && num == 0) throw std::invalid_argument("isnr: original, noisy and restored are identical");
    if (den == 0) return std::numeric_limits<double>::infinity();
    if (num == 0) return -std::numeric_limits<double>::infinity();
    return 10 * std::log10(num / den);
}

/// Decreasing ramp y_i = 16 lambda (n - i) / n^2. Its running sum is a
/// parabola whose taut string bends at every sample, and each segment the
/// linearized method closes has scanned about n/2 samples past its start,
/// so that method does order n^2 work here.
inline Signal worst_case_signal(std::size_t n, double lambda) {
    if (n < 4) throw std::invalid_argument("worst_case_signal: n must be >= 4");
    if (!(lambda > 0)) throw std::invalid_argument("worst_case_signal: lambda must be > 0");
    const double nn = static_cast<double>(n);
    const double slope = 16 * lambda / (nn * nn);
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = slope * (nn - static_cast<double>(i));
    return Signal(std::move(y));
}

/// Size-scan data: lambda uniform on [0, 50], y_i uniform on [-2 lambda, 2 lambda].
struct ScaledSample {
    Signal y;
    double lambda;
};

template <class Rng>
ScaledSample scenario_size_sample(Rng& rng, std::size_t n) {
    const double lambda = std::uniform_real_distribution<double>(0, 50)(rng);
    std::uniform_real_distribution<double> u(-2 * lambda, 2 * lambda);
    Vector y(n);
    for (double& v : y) v = lambda > 0 ? u(rng) : 0.0;
    return {Signal(std::move(y)), lambda};
}

/// Penalty-scan data: y_i uniform on [-2, 2].
template <class Rng>
Signal scenario_penalty_sample(Rng& rng, std::size_t n = 1000) {
    std::uniform_real_distribution<double> u(-2, 2);
    Vector y(n);
    for (double& v : y) v = u(rng);
    return Signal(std::move(y));
}

/// `count` points spaced evenly in log10 between lo and hi.
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0) || !(hi >= lo) || count == 0) throw std::invalid_argument("log_grid: need 0 < lo <= hi, count >= 1");
    std::vector<double> g(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = count == 1 ? 0 : static_cast<double>(k) / static_cast<double>(count - 1);
        g[k] = std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo)));
    }
    return g;
}

/// Four-block piecewise-constant test image with levels in [0, 1].
inline TensorND block_image(std::size_t h, std::size_t w) {
    TensorND img({h, w});
    const double levels[4] = {0.2, 0.8, 0.5, 0.1};
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) img.data()[i * w + j] = levels[(i >= h / 2) * 2 + (j >= w / 2)];
    return img;
}

/// Piecewise-constant volume: an axis-aligned box that drifts along the last axis.
inline TensorND block_volume(std::size_t h, std::size_t w, std::size_t frames) {
    TensorND vol({h, w, frames}, 0.2);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t shift = f * w / (4 * frames);
        for (std::size_t i = h / 4; i < 3 * h / 4; ++i)
            for (std::size_t j = w / 4 + shift; j < std::min(w, 3 * w / 4 + shift); ++j)
                vol.data()[(i * w + j) * frames + f] = 0.7;
    }
    return vol;
}

inline TensorND add_gaussian_noise(const TensorND& t, double variance, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0, std::sqrt(variance));
    TensorND out = t;
    for (double& v : out.data()) v += noise(rng);
    return out;
}

// ---------------------------------------------------------------------------
// benchmark harness

enum class BenchScenario { size, penalty, worstcase };

inline BenchScenario parse_bench_scenario(const std::string& s) {
    if (s == "size") return BenchScenario::size;
    if (s == "penalty") return BenchScenario::penalty;
    if (s == "worstcase") return BenchScenario::worstcase;
    throw std::invalid_argument("unknown bench scenario '" + s + "'");
}

inline std::string to_string(BenchScenario s) {
    switch (s) {
        case BenchScenario::size: return "size";
        case BenchScenario::penalty: return "penalty";
        case BenchScenario::worstcase: return "worstcase";
    }
    return "?";
}

struct BenchOptions {
    double p = 1;
    std::size_t max_n = 1'000'000;  // size scan stops here
    std::size_t repeats = 3;        // wall time is the median over repeats
    std::uint64_t seed = 1;
    SolverOptions solver;
};

struct BenchCell {
    std::string solver;
    std::size_t n = 0;
    double lambda = 0;
    std::int64_t wall_ns = 0;
    std::size_t inner_steps = 0;
    double gap = 0;
    bool converged = true;
    std::string error;  // set when the solver threw; the run goes on
};

struct BenchReport {
    BenchScenario scenario;
    std::vector<double> grid;  // n values, or lambda values for the penalty scan
    std::vector<std::string> solvers;
    std::vector<BenchCell> cells;
};

inline std::vector<double> bench_grid(BenchScenario s, const BenchOptions& o) {
    std::vector<double> g;
    switch (s) {
        case BenchScenario::size:
            for (std::size_t n = 10; n <= o.max_n; n *= 10) g.push_back(static_cast<double>(n));
            break;
        case BenchScenario::penalty: g = log_grid(1e-3, 1e3, 13); break;
        case BenchScenario::worstcase:
            for (std::size_t n = 1024; n <= std::min<std::size_t>(o.max_n, 16384); n *= 2) g.push_back(static_cast<double>(n));
            break;
    }
    return g;
}

/// Runs every solver on every grid cell, one cell at a time.
inline BenchReport run_bench(BenchScenario scenario, const std::vector<std::string>& solvers, const BenchOptions& o = {}) {
    if (solvers.empty()) throw std::invalid_argument("bench: empty solver set");
    std::vector<Tv1dSolver> parsed;
    for (const auto& s : solvers) parsed.push_back(parse_tv1d_solver(s));
    if (o.repeats == 0) throw std::invalid_argument("bench: repeats must be >= 1");

    BenchReport rep{scenario, bench_grid(scenario, o), solvers, {}};
    std::mt19937_64 rng(o.seed);
    for (double g : rep.grid) {
        Signal y;
        double lambda = 0;
        switch (scenario) {
            case BenchScenario::size: {
                auto s = scenario_size_sample(rng, static_cast<std::size_t>(g));
                y = std::move(s.y);
                lambda = s.lambda;
                break;
            }
            case BenchScenario::penalty:
                y = scenario_penalty_sample(rng);
                lambda = g;
                break;
            case BenchScenario::worstcase:
                lambda = 1;
                y = worst_case_signal(static_cast<std::size_t>(g), lambda);
                break;
        }
        for (std::size_t k = 0; k < parsed.size(); ++k) {
            BenchCell cell;
            cell.solver = solvers[k];
            cell.n = y.size();
            cell.lambda = lambda;
            try {
                std::vector<std::int64_t> times;
                for (std::size_t r = 0; r < o.repeats; ++r) {
                    const ProxResult res = prox_tv1d(y, WeightVector::uniform(lambda), o.p, parsed[k], o.solver);
                    times.push_back(res.report.wall_time.count());
                    cell.inner_steps = res.report.inner_steps;
                    cell.gap = res.report.duality_gap;
                    cell.converged = res.report.converged;
                }
                std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
                cell.wall_ns = times[times.size() / 2];
            } catch (const std::exception& e) {
                cell.error = e.what();
                cell.converged = false;
            }
            rep.cells.push_back(std::move(cell));
        }
    }
    return rep;
}

}  // namespace tvprox
