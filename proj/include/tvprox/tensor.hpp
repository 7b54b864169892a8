#pragma once

// Dense row-major tensors, per-axis penalties and fiber addressing.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace tvprox {

using Dims = std::vector<std::size_t>;

inline std::size_t dims_product(const Dims& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;
}

inline std::string dims_string(const Dims& dims) {
    std::string s = "(";
    for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
    return s + ")";
}

class TensorND {
public:
    TensorND() = default;
    explicit TensorND(Dims dims, double fill = 0.0) : dims_(std::move(dims)) {
        check_dims();
        data_.assign(dims_product(dims_), fill);
    }
    TensorND(Dims dims, Vector data) : dims_(std::move(dims)), data_(std::move(data)) {
        check_dims();
        if (data_.size() != dims_product(dims_))
            throw std::invalid_argument("TensorND: data length " + std::to_string(data_.size()) +
                                        " does not match dims " + dims_string(dims_));
    }

    const Dims& dims() const noexcept { return dims_; }
    std::size_t ndim() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t dim(std::size_t k) const { return dims_.at(k); }

    Vector& data() noexcept { return data_; }
    const Vector& data() const noexcept { return data_; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Number of elements between consecutive entries along axis k.
    std::size_t stride(std::size_t k) const {
        std::size_t s = 1;
        for (std::size_t j = k + 1; j < dims_.size(); ++j) s *= dims_[j];
        return s;
    }

    std::size_t offset(std::span<const std::size_t> index) const {
        if (index.size() != dims_.size()) throw std::invalid_argument("TensorND: index rank mismatch");
        std::size_t off = 0;
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            if (index[k] >= dims_[k]) throw std::out_of_range("TensorND: index out of range");
            off = off * dims_[k] + index[k];
        }
        return off;
    }
    double& at(std::initializer_list<std::size_t> index) { return data_[offset(std::vector<std::size_t>(index))]; }
    double at(std::initializer_list<std::size_t> index) const {
        return data_[offset(std::vector<std::size_t>(index))];
    }

    Dims unravel(std::size_t off) const {
        Dims index(dims_.size());
        for (std::size_t k = dims_.size(); k-- > 0;) {
            index[k] = off % dims_[k];
            off /= dims_[k];
        }
        return index;
    }

    friend bool operator==(const TensorND&, const TensorND&) = default;

private:
    void check_dims() const {
        if (dims_.empty()) throw std::invalid_argument("TensorND: need at least one axis");
        for (std::size_t d : dims_)
            if (d == 0) throw std::invalid_argument("TensorND: every dim must be >= 1");
        for (double v : data_)
            if (!std::isfinite(v)) throw std::invalid_argument("TensorND: non-finite entry");
    }

    Dims dims_;
    Vector data_;
};

/// One 1D slice along `axis`: entries offset, offset + stride, ...
struct FiberView {
    std::size_t axis = 0;
    std::size_t offset = 0;
    std::size_t stride = 1;
    std::size_t length = 0;

    Vector gather(std::span<const double> data) const {
        Vector v(length);
        for (std::size_t i = 0; i < length; ++i) v[i] = data[offset + i * stride];
        return v;
    }
    void scatter(std::span<const double> v, std::span<double> data) const {
        for (std::size_t i = 0; i < length; ++i) data[offset + i * stride] = v[i];
    }
};

/// Fibers along axis k, numbered in ascending order of the multi-index
/// over the remaining axes.
class FiberSet {
public:
    FiberSet(const Dims& dims, std::size_t axis) : axis_(axis) {
        if (axis >= dims.size()) throw std::invalid_argument("FiberSet: axis out of range");
        length_ = dims[axis];
        inner_ = 1;
        for (std::size_t j = axis + 1; j < dims.size(); ++j) inner_ *= dims[j];
        count_ = dims_product(dims) / length_;
    }

    std::size_t size() const noexcept { return count_; }
    std::size_t length() const noexcept { return length_; }

    FiberView operator[](std::size_t f) const {
        const std::size_t outer = f / inner_, inner = f % inner_;
        return {axis_, outer * length_ * inner_ + inner, inner_, length_};
    }

private:
    std::size_t axis_, length_, inner_, count_;
};

/// Penalty λ‖D x‖_p on every fiber of one axis. For p = 1 an optional
/// weight tensor gives per-edge weights: same dims as the data except
/// n_k - 1 along this axis.
struct AxisPenalty {
    double lambda = 0;
    double p = 1;
    std::optional<TensorND> weights{};

    bool is_zero() const {
        if (!weights) return lambda == 0;
        for (double v : weights->data())
            if (v != 0) return false;
        return true;
    }
};

struct AxisSpec {
    std::vector<AxisPenalty> axes;

    AxisSpec() = default;
    AxisSpec(std::initializer_list<AxisPenalty> a) : axes(a) {}
    explicit AxisSpec(std::vector<AxisPenalty> a) : axes(std::move(a)) {}

    std::size_t size() const noexcept { return axes.size(); }
    const AxisPenalty& operator[](std::size_t k) const { return axes.at(k); }

    void validate(const Dims& dims) const {
        if (axes.size() != dims.size())
            throw std::invalid_argument("AxisSpec: " + std::to_string(axes.size()) + " entries for a " +
                                        std::to_string(dims.size()) + "-axis tensor");
        for (std::size_t k = 0; k < axes.size(); ++k) {
            const auto& a = axes[k];
            const std::string where = "AxisSpec axis " + std::to_string(k) + ": ";
            if (!(a.lambda >= 0) || !std::isfinite(a.lambda)) throw std::invalid_argument(where + "lambda must be >= 0");
            if (!(a.p >= 1)) throw std::invalid_argument(where + "p must be >= 1");
            if (!a.weights) continue;
            if (a.p != 1) throw std::invalid_argument(where + "weight tensors need p = 1");
            Dims expect = dims;
            expect[k] = dims[k] - 1;
            if (dims[k] < 2 || a.weights->dims() != expect)
                throw std::invalid_argument(where + "weight tensor must have dims " + dims_string(expect));
            for (double v : a.weights->data())
                if (v < 0) throw std::invalid_argument(where + "weights must be >= 0");
        }
    }
};

}  // namespace tvprox
