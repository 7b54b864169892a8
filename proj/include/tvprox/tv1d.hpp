#pragma once

// Single entry point for 1D TV proximity with any p and solver.

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "core.hpp"
#include "projected_newton.hpp"
#include "taut_string.hpp"
#include "tv_l2.hpp"
#include "tv_lp.hpp"

namespace tvprox {

enum class Tv1dSolver { automatic, classic, linearized, hybrid, pn, msn, gp, fw, gp_fw };

inline Tv1dSolver parse_tv1d_solver(std::string_view s) {
    if (s == "auto") return Tv1dSolver::automatic;
    if (s == "classic") return Tv1dSolver::classic;
    if (s == "linearized") return Tv1dSolver::linearized;
    if (s == "hybrid") return Tv1dSolver::hybrid;
    if (s == "pn") return Tv1dSolver::pn;
    if (s == "msn") return Tv1dSolver::msn;
    if (s == "gp") return Tv1dSolver::gp;
    if (s == "fw") return Tv1dSolver::fw;
    if (s == "gp-fw") return Tv1dSolver::gp_fw;
    throw std::invalid_argument("unknown 1D solver '" + std::string(s) + "'");
}

inline std::string to_string(Tv1dSolver s) {
    switch (s) {
        case Tv1dSolver::automatic: return "auto";
        case Tv1dSolver::classic: return "classic";
        case Tv1dSolver::linearized: return "linearized";
        case Tv1dSolver::hybrid: return "hybrid";
        case Tv1dSolver::pn: return "pn";
        case Tv1dSolver::msn: return "msn";
        case Tv1dSolver::gp: return "gp";
        case Tv1dSolver::fw: return "fw";
        case Tv1dSolver::gp_fw: return "gp-fw";
    }
    return "?";
}

/// prox of w-weighted TV_p. p = 1 accepts per-edge weights; any other p
/// needs uniform weights. `automatic` picks hybrid taut string (p = 1),
/// MSN/GP hybrid (p = 2), GP on the l1 ball (p = inf), GP+FW otherwise.
inline ProxResult prox_tv1d(const Signal& y, const WeightVector& w, double p, Tv1dSolver solver = Tv1dSolver::automatic,
                            const SolverOptions& opts = {}) {
    detail::check_p(p);
    auto unsupported = [&] {
        return std::invalid_argument("solver '" + to_string(solver) + "' does not handle p = " + std::to_string(p));
    };
    if (p == 1) {
        switch (solver) {
            case Tv1dSolver::automatic:
            case Tv1dSolver::hybrid: return prox_tv1d_l1_hybrid(y, w, opts);
            case Tv1dSolver::classic: return prox_tv1d_l1_classic(y, w, opts);
            case Tv1dSolver::linearized: return prox_tv1d_l1_linearized(y, w, opts);
            case Tv1dSolver::pn: return prox_tv1d_l1_pn(y, w, opts);
            default: throw unsupported();
        }
    }
    if (!w.is_uniform()) throw std::invalid_argument("per-edge weights are only supported for p = 1");
    const double lambda = w.uniform_value();
    if (std::isinf(p)) {
        if (solver == Tv1dSolver::automatic || solver == Tv1dSolver::gp) return prox_tv1d_linf(y, lambda, opts);
        throw unsupported();
    }
    if (p == 2) {
        switch (solver) {
            case Tv1dSolver::automatic:
            case Tv1dSolver::hybrid: return prox_tv1d_l2_hybrid(y, lambda, opts);
            case Tv1dSolver::msn: return prox_tv1d_l2_msn(y, lambda, opts);
            case Tv1dSolver::gp: return prox_tv1d_l2_gp(y, lambda, opts);
            case Tv1dSolver::fw: return prox_tv1d_lp_fw(y, lambda, p, opts);
            case Tv1dSolver::gp_fw: return prox_tv1d_lp_hybrid(y, lambda, p, opts);
            default: throw unsupported();
        }
    }
    switch (solver) {
        case Tv1dSolver::automatic:
        case Tv1dSolver::hybrid:
        case Tv1dSolver::gp_fw: return prox_tv1d_lp_hybrid(y, lambda, p, opts);
        case Tv1dSolver::gp: return prox_tv1d_lp_gp(y, lambda, p, opts);
        case Tv1dSolver::fw: return prox_tv1d_lp_fw(y, lambda, p, opts);
        default: throw unsupported();
    }
}

}  // namespace tvprox
