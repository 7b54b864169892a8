#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "tvprox/oracle.hpp"
#include "tvprox/tv1d.hpp"

using namespace tvprox;

namespace {

const Tv1dSolver kL2Solvers[] = {Tv1dSolver::msn, Tv1dSolver::gp, Tv1dSolver::hybrid};

SolverOptions tight() {
    SolverOptions o;
    o.gap_tol = 1e-14;  // x error scales like sqrt(2 gap)
    o.boundary_tol = 1e-10;
    o.max_iter = 200000;
    return o;
}

}  // namespace

TEST(TvL2, SingleEdgeMatchesL1) {
    // with one difference ||D x||_2 = |x_2 - x_1|
    std::mt19937_64 rng(1);
    for (int t = 0; t < 300; ++t) {
        const double a = testutil::uniform(rng, -3, 3), b = testutil::uniform(rng, -3, 3);
        const double lambda = testutil::uniform(rng, 0.01, 3);
        const Vector expect = testutil::two_point(a, b, lambda);
        for (Tv1dSolver s : kL2Solvers) {
            const ProxResult r = prox_tv1d(Signal{a, b}, WeightVector::uniform(lambda), 2, s, tight());
            EXPECT_NEAR(r.x[0], expect[0], 1e-7) << to_string(s);
            EXPECT_NEAR(r.x[1], expect[1], 1e-7) << to_string(s);
        }
    }
}

TEST(TvL2, InactiveConstraintGivesMean) {
    // lambda >= ||unconstrained dual||_2 collapses the signal to its mean
    for (Tv1dSolver s : kL2Solvers) {
        const ProxResult r = prox_tv1d(Signal{1, 3, 1}, WeightVector::uniform(10), 2, s);
        for (double v : r.x) EXPECT_NEAR(v, 5.0 / 3, 1e-12);
        EXPECT_TRUE(r.report.converged);
    }
}

TEST(TvL2, AgreesWithOracle) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = testutil::uniform_size(rng, 3, 30);
        const Vector y = testutil::normal_vector(rng, n, 2);
        const double lambda = testutil::uniform(rng, 0.05, 3);
        const OracleResult ref = oracle_tv1d_dual_qp(Signal(y), WeightVector::uniform(lambda), 2);
        ASSERT_TRUE(ref.certified);
        for (Tv1dSolver s : kL2Solvers) {
            const ProxResult r = prox_tv1d(Signal(y), WeightVector::uniform(lambda), 2, s, tight());
            EXPECT_TRUE(r.report.converged) << to_string(s);
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r.x[i], ref.x[i], 1e-6) << to_string(s);
        }
    }
}

TEST(TvL2, DualFeasibleAndGapReported) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = testutil::uniform_size(rng, 2, 500);
        const Vector y = testutil::normal_vector(rng, n);
        const double lambda = testutil::uniform(rng, 0.01, 5);
        const ProxResult r = prox_tv1d(Signal(y), WeightVector::uniform(lambda), 2, Tv1dSolver::hybrid);
        EXPECT_LE(detail::norm_p(r.dual, 2), lambda * (1 + 1e-12));
        EXPECT_NEAR(r.report.duality_gap, dual_gap_lp(r.dual, y, lambda, 2), 1e-12);
        EXPECT_LE(r.report.duality_gap, SolverOptions{}.gap_tol);
        EXPECT_LE(moreau_check(r.x.values(), diff_transpose_apply(r.dual, n), y), 1e-10);
    }
}

TEST(TvL2, HybridPicksByNorm) {
    const ProxResult big = prox_tv1d(Signal{0, 1, 0}, WeightVector::uniform(100), 2, Tv1dSolver::hybrid);
    EXPECT_EQ(big.report.solver, "hybrid(msn)");
    std::mt19937_64 rng(4);
    const Vector y = testutil::normal_vector(rng, 100, 3);
    const ProxResult small = prox_tv1d(Signal(y), WeightVector::uniform(0.5), 2, Tv1dSolver::hybrid);
    EXPECT_EQ(small.report.solver.rfind("hybrid(gp", 0), 0u);
}

TEST(TvL2, RejectsPerEdgeWeights) {
    EXPECT_THROW(prox_tv1d(Signal{0, 1, 2}, WeightVector::per_edge({1, 1}), 2), std::invalid_argument);
    EXPECT_THROW(prox_tv1d(Signal{0, 1, 2}, WeightVector::uniform(1), 2, Tv1dSolver::classic), std::invalid_argument);
}

TEST(TvL2, ZeroLambdaIsIdentity) {
    for (Tv1dSolver s : kL2Solvers) {
        const ProxResult r = prox_tv1d(Signal{3, -1, 2}, WeightVector::uniform(0), 2, s);
        EXPECT_EQ(r.x.vector(), (Vector{3, -1, 2}));
    }
}
