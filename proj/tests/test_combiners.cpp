#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "tvprox/combiners.hpp"
#include "tvprox/oracle.hpp"
#include "tvprox/tv1d.hpp"

using namespace tvprox;

namespace {

ProxOperator tv_op(double lambda, double p) {
    SolverOptions inner;
    inner.gap_tol = 1e-14;
    return {[=](std::span<const double> v, double s) {
                return prox_tv1d(Signal(Vector(v.begin(), v.end())), WeightVector::uniform(lambda * s), p,
                                 Tv1dSolver::automatic, inner)
                    .x.vector();
            },
            [=](std::span<const double> v) { return tv_penalty(v, WeightVector::uniform(lambda), p); }, "tv"};
}

ProxOperator l1_op(double lambda) {
    return {[=](std::span<const double> v, double s) {
                Vector x(v.begin(), v.end());
                soft_threshold(x, lambda * s);
                return x;
            },
            [=](std::span<const double> v) {
                double a = 0;
                for (double t : v) a += std::abs(t);
                return lambda * a;
            },
            "l1"};
}

SolverOptions tight() {
    SolverOptions o;
    o.stop_tol = 1e-10;
    o.max_iter = 200000;
    return o;
}

CombinerResult run(Combiner c, std::span<const double> y, const std::vector<ProxOperator>& ops,
                   const SolverOptions& o) {
    switch (c) {
        case Combiner::pd: return combine_pd(y, ops.at(0), ops.at(1), o);
        case Combiner::dr: return combine_dr(y, ops.at(0), ops.at(1), o);
        case Combiner::ppd: return combine_ppd(y, ops, o);
        case Combiner::admm: return combine_admm(y, ops, o);
    }
    throw std::logic_error("unreachable");
}

const Combiner kAll[] = {Combiner::pd, Combiner::ppd, Combiner::dr, Combiner::admm};

}  // namespace

TEST(Combiners, SplitPenaltyEqualsWholePenalty) {
    // prox of a TV + b TV is the prox of (a + b) TV
    std::mt19937_64 rng(1);
    for (int t = 0; t < 10; ++t) {
        const Vector y = testutil::normal_vector(rng, 30, 2);
        const double a = testutil::uniform(rng, 0.1, 1), b = testutil::uniform(rng, 0.1, 1);
        const Vector expect =
            prox_tv1d(Signal(y), WeightVector::uniform(a + b), 1, Tv1dSolver::classic).x.vector();
        for (Combiner c : kAll) {
            const CombinerResult r = run(c, y, {tv_op(a, 1), tv_op(b, 1)}, tight());
            EXPECT_TRUE(r.report.converged) << to_string(c);
            for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(r.x[i], expect[i], 1e-6) << to_string(c);
        }
    }
}

TEST(Combiners, FusedLassoComposition) {
    // l1 + TV has the exact prox soft(TV prox)
    std::mt19937_64 rng(2);
    for (int t = 0; t < 10; ++t) {
        const Vector y = testutil::normal_vector(rng, 25, 2);
        Vector expect = prox_tv1d(Signal(y), WeightVector::uniform(0.4), 1, Tv1dSolver::classic).x.vector();
        soft_threshold(expect, 0.3);
        for (Combiner c : {Combiner::pd, Combiner::ppd, Combiner::admm}) {
            const CombinerResult r = run(c, y, {l1_op(0.3), tv_op(0.4, 1)}, tight());
            for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(r.x[i], expect[i], 1e-6) << to_string(c);
        }
    }
}

TEST(Combiners, MixedNormsAgreeWithOracle) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 6; ++t) {
        const std::size_t n = testutil::uniform_size(rng, 4, 16);
        const Vector y = testutil::normal_vector(rng, n, 2);
        std::vector<std::size_t> chain(n);
        for (std::size_t i = 0; i < n; ++i) chain[i] = i;
        RegularizerSum reg(n);
        reg.add_chain(chain, 0.5, 1).add_chain(chain, 0.7, 2).add_l1(0.2);
        const OracleResult ref = oracle_joint_prox(y, reg);
        ASSERT_TRUE(ref.certified);
        const std::vector<ProxOperator> ops{tv_op(0.5, 1), tv_op(0.7, 2), l1_op(0.2)};
        for (Combiner c : {Combiner::ppd, Combiner::admm}) {
            const CombinerResult r = run(c, y, ops, tight());
            for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r.x[i], ref.x[i], 1e-6) << to_string(c);
            EXPECT_NEAR(r.report.objective, ref.objective, 1e-8 * std::max(1.0, ref.objective));
        }
    }
}

TEST(Combiners, ZeroOperatorIsNeutral) {
    const Vector y{0, 2, 1, 5};
    const Vector expect = prox_tv1d(Signal(y), WeightVector::uniform(0.5), 1).x.vector();
    for (Combiner c : kAll) {
        const CombinerResult r = run(c, y, {tv_op(0.5, 1), ProxOperator::zero()}, tight());
        for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(r.x[i], expect[i], 1e-8) << to_string(c);
    }
}

TEST(Combiners, GapReporting) {
    const Vector y{0, 2, 1, 5};
    const std::vector<ProxOperator> ops{tv_op(0.5, 1), tv_op(0.3, 1)};
    for (Combiner c : {Combiner::pd, Combiner::ppd, Combiner::admm})
        EXPECT_TRUE(std::isnan(run(c, y, ops, tight()).report.duality_gap)) << to_string(c);
    const CombinerResult dr = run(Combiner::dr, y, ops, tight());
    EXPECT_FALSE(std::isnan(dr.report.duality_gap));
    EXPECT_LE(std::abs(dr.report.duality_gap), 1e-12);
}

TEST(Combiners, ObjectiveNeedsAllPenalties) {
    ProxOperator anon = tv_op(0.5, 1);
    anon.penalty = {};
    const CombinerResult r = combine_ppd(Vector{0, 1}, {anon, tv_op(0.2, 1)});
    EXPECT_TRUE(std::isnan(r.report.objective));
}

TEST(Combiners, IterationBudget) {
    SolverOptions o;
    o.max_iter = 1;
    o.stop_tol = 1e-15;
    std::mt19937_64 rng(4);
    const Vector y = testutil::normal_vector(rng, 40, 3);
    for (Combiner c : kAll) {
        const CombinerResult r = run(c, y, {tv_op(0.5, 1), tv_op(0.5, 2)}, o);
        EXPECT_FALSE(r.report.converged) << to_string(c);
        EXPECT_EQ(r.report.iterations, 1u);
    }
}

TEST(Combiners, WorkerCountDoesNotChangeResult) {
    std::mt19937_64 rng(5);
    const Vector y = testutil::normal_vector(rng, 60, 2);
    const std::vector<ProxOperator> ops{tv_op(0.3, 1), tv_op(0.4, 2), l1_op(0.1)};
    SolverOptions one = tight(), many = tight();
    many.workers = 8;
    for (Combiner c : {Combiner::ppd, Combiner::admm}) {
        const CombinerResult a = run(c, y, ops, one), b = run(c, y, ops, many);
        EXPECT_EQ(a.x, b.x) << to_string(c);
        EXPECT_EQ(a.report.iterations, b.report.iterations);
    }
}

TEST(Combiners, OperatorErrorsPropagate) {
    ProxOperator bad{[](std::span<const double>, double) -> Vector { throw SolverError("boom"); }, {}, "bad"};
    SolverOptions o;
    o.workers = 4;
    EXPECT_THROW(combine_ppd(Vector{0, 1}, {bad, tv_op(1, 1)}, o), SolverError);
    EXPECT_THROW(combine_admm(Vector{0, 1}, {tv_op(1, 1), bad}, o), SolverError);
    EXPECT_THROW(combine_pd(Vector{0, 1}, bad, tv_op(1, 1)), SolverError);

    ProxOperator shrink{[](std::span<const double> v, double) { return Vector(v.size() - 1); }, {}, "shrink"};
    EXPECT_THROW(combine_dr(Vector{0, 1}, tv_op(1, 1), shrink), std::invalid_argument);
}

TEST(Combiners, Parsing) {
    for (Combiner c : kAll) EXPECT_EQ(parse_combiner(to_string(c)), c);
    EXPECT_THROW(parse_combiner("fista"), std::invalid_argument);
    EXPECT_THROW(combine_ppd(Vector{1}, {}), std::invalid_argument);
    EXPECT_THROW(combine_admm(Vector{1}, {}), std::invalid_argument);
}
