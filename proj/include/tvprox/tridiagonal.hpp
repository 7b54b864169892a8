#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace tvprox {

/// Cholesky factor R (upper bidiagonal) of a symmetric positive-definite
/// tridiagonal matrix A = R^T R. `diag` has m entries, `super` m-1.
class TridiagonalFactor {
public:
    TridiagonalFactor() = default;

    TridiagonalFactor(std::span<const double> diag, std::span<const double> off) {
        factor(diag, off);
    }

    void factor(std::span<const double> diag, std::span<const double> off) {
        const std::size_t m = diag.size();
        if (m > 0 && off.size() + 1 != m)
            throw std::invalid_argument("TridiagonalFactor: off-diagonal must have m-1 entries");
        d_.resize(m);
        e_.resize(m ? m - 1 : 0);
        for (std::size_t i = 0; i < m; ++i) {
            double a = diag[i];
            if (i > 0) a -= e_[i - 1] * e_[i - 1];
            if (!(a > 0)) throw SolverError("TridiagonalFactor: matrix is not positive definite");
            d_[i] = std::sqrt(a);
            if (i + 1 < m) e_[i] = off[i] / d_[i];
        }
    }

    std::size_t size() const noexcept { return d_.size(); }
    std::span<const double> diagonal() const noexcept { return d_; }
    std::span<const double> superdiagonal() const noexcept { return e_; }

    /// Solves R^T v = b in place.
    void solve_lower(std::span<double> b) const {
        const std::size_t m = d_.size();
        for (std::size_t i = 0; i < m; ++i) {
            if (i > 0) b[i] -= e_[i - 1] * b[i - 1];
            b[i] /= d_[i];
        }
    }

    /// Solves R x = v in place.
    void solve_upper(std::span<double> v) const {
        const std::size_t m = d_.size();
        for (std::size_t k = m; k-- > 0;) {
            if (k + 1 < m) v[k] -= e_[k] * v[k + 1];
            v[k] /= d_[k];
        }
    }

    /// Solves R^T R x = b in place.
    void solve(std::span<double> b) const {
        solve_lower(b);
        solve_upper(b);
    }

private:
    Vector d_, e_;
};

/// Factor of D D^T + alpha I, the (n-1)x(n-1) matrix with 2+alpha on the
/// diagonal and -1 off it.
inline TridiagonalFactor factor_ddt(std::size_t m, double alpha = 0.0) {
    Vector diag(m, 2.0 + alpha), off(m ? m - 1 : 0, -1.0);
    return TridiagonalFactor(diag, off);
}

}  // namespace tvprox
