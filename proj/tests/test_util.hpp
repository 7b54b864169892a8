#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "tvprox/core.hpp"

namespace testutil {

using tvprox::Vector;

inline Vector normal_vector(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> d(0, sd);
    Vector v(n);
    for (double& a : v) a = d(rng);
    return v;
}

inline Vector uniform_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    Vector v(n);
    for (double& a : v) a = d(rng);
    return v;
}

inline std::size_t uniform_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random per-edge weights, with roughly one edge in five set to zero.
inline Vector edge_weights(std::mt19937_64& rng, std::size_t edges, double hi) {
    Vector w = uniform_vector(rng, edges, 0, hi);
    std::bernoulli_distribution zero(0.2);
    for (double& a : w)
        if (zero(rng)) a = 0;
    return w;
}

/// TV-L1 prox of a two-sample signal.
inline Vector two_point(double a, double b, double lambda) {
    const double d = b - a;
    if (std::abs(d) <= 2 * lambda) return {0.5 * (a + b), 0.5 * (a + b)};
    const double s = d > 0 ? lambda : -lambda;
    return {a + s, b - s};
}

}  // namespace testutil
