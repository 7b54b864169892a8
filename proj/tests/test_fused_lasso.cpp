#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "tvprox/fused_lasso.hpp"
#include "tvprox/oracle.hpp"

using namespace tvprox;

namespace {

DenseMatrix identity(std::size_t n) {
    DenseMatrix m{n, n, Vector(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

}  // namespace

TEST(FusedLasso, IdentityDesignIsFlsa) {
    FusedLassoProblem prob{identity(2), {0, 2}, 0.2, 0.5};
    const FusedLassoResult r = solve_fused_lasso(prob);
    EXPECT_TRUE(r.report.converged);
    EXPECT_NEAR(r.x[0], 0.3, 1e-7);
    EXPECT_NEAR(r.x[1], 1.3, 1e-7);
}

TEST(FusedLasso, ProxMatchesOracleForLpTv) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = testutil::uniform_size(rng, 3, 12);
        FusedLassoProblem prob{identity(n), testutil::normal_vector(rng, n, 2), 0.2, 0.4, Loss::least_squares, 1.5};
        SolverOptions o;
        o.gap_tol = 1e-12;
        o.stop_tol = 1e-11;
        o.max_iter = 200000;
        const Vector x = fused_lasso_prox(prob, prob.y, 1.0, o);
        std::vector<std::size_t> chain(n);
        for (std::size_t i = 0; i < n; ++i) chain[i] = i;
        RegularizerSum reg(n);
        reg.add_l1(0.2).add_chain(chain, 0.4, 1.5);
        const OracleResult ref = oracle_joint_prox(prob.y, reg);
        ASSERT_TRUE(ref.certified);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i], ref.x[i], 1e-6);
    }
}

TEST(FusedLasso, LeastSquaresWithoutPenalty) {
    // overdetermined system with exact solution [1/3, 1/3, 2/3]
    DenseMatrix a{4, 3, {1, 1, 0, 0, 1, 1, 1, 0, 1, 1, 1, 1}};
    FusedLassoProblem prob{a, {2.0 / 3, 1, 1, 4.0 / 3}, 0, 0};
    const FusedLassoResult r = solve_fused_lasso(prob);
    EXPECT_TRUE(r.report.converged);
    EXPECT_NEAR(r.x[0], 1.0 / 3, 1e-6);
    EXPECT_NEAR(r.x[1], 1.0 / 3, 1e-6);
    EXPECT_NEAR(r.x[2], 2.0 / 3, 1e-6);
}

TEST(FusedLasso, InterceptAbsorbsOffset) {
    FusedLassoProblem prob{identity(3), {5, 5, 5}, 1, 0};
    prob.intercept = true;
    const FusedLassoResult r = solve_fused_lasso(prob);
    EXPECT_TRUE(r.report.converged);
    EXPECT_NEAR(r.intercept, 5, 1e-6);
    for (double v : r.x) EXPECT_NEAR(v, 0, 1e-6);
}

TEST(FusedLasso, LogisticGradientMatchesFiniteDifference) {
    const FusedLassoProblem prob = synthetic_fused_lasso(20, 6, 3);
    std::mt19937_64 rng(4);
    const Vector x = testutil::normal_vector(rng, 6, 0.5);
    const double c = 0.3;
    Vector g;
    double gc = 0;
    fused_lasso_loss(prob, x, c, &g, &gc);
    const double h = 1e-6;
    for (std::size_t j = 0; j < x.size(); ++j) {
        Vector a = x, b = x;
        a[j] += h;
        b[j] -= h;
        const double fd =
            (fused_lasso_loss(prob, a, c, nullptr, nullptr) - fused_lasso_loss(prob, b, c, nullptr, nullptr)) / (2 * h);
        EXPECT_NEAR(fd, g[j], 1e-5);
    }
    const double fdc =
        (fused_lasso_loss(prob, x, c + h, nullptr, nullptr) - fused_lasso_loss(prob, x, c - h, nullptr, nullptr)) /
        (2 * h);
    EXPECT_NEAR(fdc, gc, 1e-5);
}

TEST(FusedLasso, LogisticSyntheticConverges) {
    const FusedLassoProblem prob = synthetic_fused_lasso(50, 30, 7);
    EXPECT_EQ(prob.l1, 10);
    EXPECT_EQ(prob.l2, 10);
    for (double v : prob.y) EXPECT_TRUE(v == 1 || v == -1);
    const FusedLassoResult r = solve_fused_lasso(prob);
    EXPECT_TRUE(r.report.converged);
    const double f0 = fused_lasso_loss(prob, Vector(30, 0.0), 0, nullptr, nullptr);
    EXPECT_LE(r.report.objective, f0 + 1e-12);
}

TEST(FusedLasso, Validation) {
    EXPECT_THROW(solve_fused_lasso(FusedLassoProblem{identity(2), {1}, 0, 0}), std::invalid_argument);
    EXPECT_THROW(solve_fused_lasso(FusedLassoProblem{identity(2), {1, 2}, -1, 0}), std::invalid_argument);
    FusedLassoProblem bad{identity(2), {1, 0.5}, 0, 0, Loss::logistic};
    EXPECT_THROW(solve_fused_lasso(bad), std::invalid_argument);
    EXPECT_THROW(parse_loss("hinge"), std::invalid_argument);
    EXPECT_EQ(parse_loss("logistic"), Loss::logistic);
}
