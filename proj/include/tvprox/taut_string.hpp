#pragma once

// Direct solvers for the (weighted) TV-L1 proximity problem
//
//     min_x 1/2 ||x - y||^2 + sum_i w_i |x_{i+1} - x_i|
//
// via the taut string through the tube |s_i - r_i| <= w_i around the
// cumulative sum r of y, pinned at s_0 = 0 and s_n = r_n. The solution is the
// slope sequence of the string.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace tvprox {

/// One piece of a majorant/minorant polyline.
struct Segment {
    double x_span = 0;
    double y_rise = 0;
    double slope = 0;
};

/// Double-ended queue of segments on a single fixed allocation. Segments are
/// appended at the tail and consumed from either end; clear() rewinds to the
/// start of the buffer, so no wraparound is ever needed.
class SegmentDeque {
public:
    explicit SegmentDeque(std::size_t capacity) : buf_(capacity + 1) {}

    bool empty() const noexcept { return head_ == tail_; }
    std::size_t size() const noexcept { return tail_ - head_; }
    std::size_t capacity() const noexcept { return buf_.size(); }

    Segment& front() { return buf_[head_]; }
    Segment& back() { return buf_[tail_ - 1]; }
    Segment& at(std::size_t i) { return buf_[head_ + i]; }

    void push_back(double span, double rise) {
        if (tail_ == buf_.size()) throw std::length_error("SegmentDeque: capacity exceeded");
        buf_[tail_++] = Segment{span, rise, rise / span};
    }
    void pop_front() { ++head_; }
    void pop_back() { --tail_; }
    void clear() { head_ = tail_ = 0; }

    /// Merges the last two segments into one.
    void merge_back() {
        Segment last = buf_[--tail_];
        Segment& prev = buf_[tail_ - 1];
        prev.x_span += last.x_span;
        prev.y_rise += last.y_rise;
        prev.slope = prev.y_rise / prev.x_span;
    }

private:
    std::vector<Segment> buf_;
    std::size_t head_ = 0;
    std::size_t tail_ = 0;
};

namespace detail {

inline void check_l1_inputs(std::span<const double> y, const WeightVector& w) {
    w.check_length(y.size());
    for (double v : y)
        if (!std::isfinite(v)) throw std::invalid_argument("TV-L1 prox: non-finite input");
}

/// Classic taut string. Writes the slopes into `out` and returns the number
/// of main-loop iterations. `width(i)` is the tube half-width at string
/// vertex i, 1 <= i < n.
template <class Width>
std::size_t taut_string_classic(std::span<const double> y, Width width, std::span<double> out) {
    const std::size_t n = y.size();
    if (n == 0) return 0;

    SegmentDeque major(n);  // concave majorant of the tube floor
    SegmentDeque minor(n);  // convex minorant of the tube ceiling

    double origin_x = 0, origin_y = 0;
    double major_end_x = 0, major_end_y = 0;
    double minor_end_x = 0, minor_end_y = 0;
    double r = 0;
    std::size_t steps = 0;

    auto emit = [&](const Segment& s) {
        const auto first = static_cast<std::size_t>(origin_x);
        const auto last = static_cast<std::size_t>(origin_x + s.x_span);
        for (std::size_t k = first; k < last; ++k) out[k] = s.slope;
        origin_x += s.x_span;
        origin_y += s.y_rise;
    };

    for (std::size_t i = 1; i <= n; ++i) {
        ++steps;
        r += y[i - 1];
        const double h = i < n ? width(i) : 0.0;
        const double floor = r - h;
        const double ceil = r + h;
        const double xi = static_cast<double>(i);

        major.push_back(xi - major_end_x, floor - major_end_y);
        major_end_x = xi;
        major_end_y = floor;
        while (major.size() >= 2 && major.back().slope > major.at(major.size() - 2).slope)
            major.merge_back();

        minor.push_back(xi - minor_end_x, ceil - minor_end_y);
        minor_end_x = xi;
        minor_end_y = ceil;
        while (minor.size() >= 2 && minor.back().slope < minor.at(minor.size() - 2).slope)
            minor.merge_back();

        // A zero-width vertex can pin the string exactly at the current point,
        // in which case the rebuilt hull is empty.
        while (!major.empty() && !minor.empty() && major.front().slope > minor.front().slope) {
            // break at the left-most touching point; ties go to the minorant
            if (minor.front().x_span <= major.front().x_span) {
                emit(minor.front());
                minor.pop_front();
                major.clear();
                if (major_end_x > origin_x) major.push_back(major_end_x - origin_x, major_end_y - origin_y);
            } else {
                emit(major.front());
                major.pop_front();
                minor.clear();
                if (minor_end_x > origin_x) minor.push_back(minor_end_x - origin_x, minor_end_y - origin_y);
            }
        }
    }

    // Both hulls now coincide with the chord to (n, r_n).
    if (origin_x < static_cast<double>(n)) {
        const double slope = (r - origin_y) / (static_cast<double>(n) - origin_x);
        for (auto k = static_cast<std::size_t>(origin_x); k < n; ++k) out[k] = slope;
    }
    return steps;
}

/// State of the linearized (affine majorant/minorant) scan.
struct LinearizedState {
    std::size_t seg_start = 0;     // first sample of the open segment
    std::size_t k = 0;             // current sample
    std::size_t break_minor = 0;   // last index where the minorant touched the ceiling
    std::size_t break_major = 0;   // last index where the majorant touched the floor
    double value_minor = 0;        // slope of the minorant line
    double value_major = 0;        // slope of the majorant line
    double height_minor = 0;       // dual value along the minorant line
    double height_major = 0;       // dual value along the majorant line
};

/// Result of a (possibly interrupted) linearized scan.
struct LinearizedOutcome {
    std::size_t steps = 0;
    bool finished = true;
    std::size_t resume_at = 0;     // first unsolved sample when !finished
    double carried_dual = 0;       // dual value u_{resume_at-1}
};

/// Linearized taut string. `bound(k)` is the dual bound on edge k and must
/// return 0 for k = n-1. `out` may alias `y`. When `budget` is exceeded the
/// scan stops at the last fixed breakpoint and reports where to resume.
template <class Bound>
LinearizedOutcome taut_string_linearized(std::span<const double> y, Bound bound, std::span<double> out,
                                         std::size_t budget = static_cast<std::size_t>(-1)) {
    const std::size_t n = y.size();
    LinearizedOutcome res;
    if (n == 0) return res;

    LinearizedState s;
    auto restart = [&](std::size_t start, double carried) {
        const double b = bound(start);
        s.seg_start = s.k = s.break_minor = s.break_major = start;
        s.value_minor = y[start] + carried - b;
        s.value_major = y[start] + carried + b;
        s.height_minor = b;
        s.height_major = -b;
    };
    auto fill = [&](std::size_t last, double v) {
        for (std::size_t j = s.seg_start; j <= last; ++j) out[j] = v;
    };
    restart(0, 0.0);

    for (;;) {
        if (res.steps >= budget) {
            res.finished = false;
            res.resume_at = s.seg_start;
            return res;
        }
        ++res.steps;
        if (s.k == n - 1) {
            if (s.height_minor < 0) {
                fill(s.break_minor, s.value_minor);
                const double c = bound(s.break_minor);
                restart(s.break_minor + 1, c);
                res.carried_dual = c;
            } else if (s.height_major > 0) {
                fill(s.break_major, s.value_major);
                const double c = -bound(s.break_major);
                restart(s.break_major + 1, c);
                res.carried_dual = c;
            } else {
                s.value_minor += s.height_minor / static_cast<double>(s.k - s.seg_start + 1);
                fill(n - 1, s.value_minor);
                return res;
            }
            continue;
        }
        const double next = y[s.k + 1];
        const double b_next = bound(s.k + 1);
        s.height_minor += next - s.value_minor;
        s.height_major += next - s.value_major;
        if (s.height_minor < -b_next) {
            // minorant dips below the floor: negative jump after break_minor
            fill(s.break_minor, s.value_minor);
            const double c = bound(s.break_minor);
            restart(s.break_minor + 1, c);
            res.carried_dual = c;
        } else if (s.height_major > b_next) {
            // majorant rises above the ceiling: positive jump after break_major
            fill(s.break_major, s.value_major);
            const double c = -bound(s.break_major);
            restart(s.break_major + 1, c);
            res.carried_dual = c;
        } else {
            ++s.k;
            const double len = static_cast<double>(s.k - s.seg_start + 1);
            if (s.height_minor >= b_next) {
                s.value_minor += (s.height_minor - b_next) / len;
                s.height_minor = b_next;
                s.break_minor = s.k;
            }
            if (s.height_major <= -b_next) {
                s.value_major += (s.height_major + b_next) / len;
                s.height_major = -b_next;
                s.break_major = s.k;
            }
        }
    }
}

inline ProxResult finish_l1(std::span<const double> y, const WeightVector& w, Vector x, SolverReport rep) {
    DualVector u = dual_from_primal(x, y);
    rep.duality_gap = dual_gap_l1(u, y, w);
    rep.objective = tv_objective(x, y, w, 1.0);
    return ProxResult{Signal(std::move(x)), std::move(rep), std::move(u)};
}

}  // namespace detail

/// Classic taut-string solver (greatest convex minorant / smallest concave
/// majorant kept in fixed-capacity deques). O(n) worst case.
inline ProxResult prox_tv1d_l1_classic(const Signal& y, const WeightVector& w,
                                       const SolverOptions& opts = {}) {
    (void)opts;
    detail::check_l1_inputs(y, w);
    detail::Stopwatch clock;
    const std::size_t n = y.size();
    Vector x(n);
    SolverReport rep;
    rep.solver = "classic";
    rep.inner_steps = detail::taut_string_classic(y.values(), [&](std::size_t i) { return w[i - 1]; }, x);
    rep.iterations = rep.inner_steps;
    rep.wall_time = clock.elapsed();
    return detail::finish_l1(y, w, std::move(x), std::move(rep));
}

/// Linearized taut string, in place. `values` holds y on entry and the prox on exit.
/// Returns the number of main-loop iterations (restarts included).
inline std::size_t prox_tv1d_l1_linearized_inplace(std::span<double> values, const WeightVector& w) {
    detail::check_l1_inputs(values, w);
    const std::size_t n = values.size();
    auto bound = [&](std::size_t k) { return k + 1 < n ? w[k] : 0.0; };
    return detail::taut_string_linearized(std::span<const double>(values), bound, values).steps;
}

/// Linearized taut string: affine majorant/minorant with restarts at each
/// breakpoint. O(n^2) worst case, very fast in practice.
inline ProxResult prox_tv1d_l1_linearized(const Signal& y, const WeightVector& w,
                                          const SolverOptions& opts = {}) {
    (void)opts;
    detail::check_l1_inputs(y, w);
    detail::Stopwatch clock;
    Vector x(y.vector());
    SolverReport rep;
    rep.solver = "linearized";
    rep.inner_steps = prox_tv1d_l1_linearized_inplace(x, w);
    rep.iterations = rep.inner_steps;
    rep.wall_time = clock.elapsed();
    return detail::finish_l1(y, w, std::move(x), std::move(rep));
}

/// Runs the linearized method for at most ceil(n^S) steps, then hands the
/// unsolved suffix to the classic method.
inline ProxResult prox_tv1d_l1_hybrid(const Signal& y, const WeightVector& w, const SolverOptions& opts = {}) {
    opts.validate();
    detail::check_l1_inputs(y, w);
    detail::Stopwatch clock;
    const std::size_t n = y.size();
    Vector x(n);
    SolverReport rep;
    rep.solver = "hybrid";
    if (n == 0) return detail::finish_l1(y, w, std::move(x), std::move(rep));

    const auto budget =
        static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), opts.hybrid_exponent)));
    auto bound = [&](std::size_t k) { return k + 1 < n ? w[k] : 0.0; };
    const auto lin = detail::taut_string_linearized(y.values(), bound, x, budget);
    rep.inner_steps = lin.steps;
    if (!lin.finished) {
        // Suffix problem with the fixed boundary dual folded into its first sample.
        const std::size_t start = lin.resume_at;
        Vector sub(y.begin() + static_cast<std::ptrdiff_t>(start), y.end());
        if (start > 0) sub[0] += lin.carried_dual;
        rep.inner_steps += detail::taut_string_classic(
            sub, [&](std::size_t i) { return w[start + i - 1]; },
            std::span<double>(x).subspan(start));
        rep.solver = "hybrid(classic)";
    }
    rep.iterations = rep.inner_steps;
    rep.wall_time = clock.elapsed();
    return detail::finish_l1(y, w, std::move(x), std::move(rep));
}

}  // namespace tvprox
