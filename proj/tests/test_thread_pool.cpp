#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvprox/thread_pool.hpp"

using namespace tvprox;

TEST(ThreadPool, RunsEveryIndexOnce) {
    for (std::size_t workers : {1u, 2u, 8u}) {
        ThreadPool pool(workers);
        std::vector<std::atomic<int>> hits(1000);
        const TaskFailure f = pool.parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
        EXPECT_FALSE(f.error);
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
}

TEST(ThreadPool, ReportsLowestFailingIndex) {
    ThreadPool pool(8);
    std::atomic<int> ran{0};
    const TaskFailure f = pool.parallel_for(200, [&](std::size_t i) {
        ++ran;
        if (i == 150 || i == 37 || i == 90) throw std::runtime_error("bad " + std::to_string(i));
    });
    EXPECT_EQ(ran.load(), 200);  // failures do not cancel the other indices
    EXPECT_EQ(f.index, 37u);
    try {
        rethrow(f);
        FAIL() << "expected a rethrow";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "bad 37");
    }
}

TEST(ThreadPool, NestedCallsRunInline) {
    ThreadPool pool(4);
    std::vector<std::atomic<int>> hits(16 * 16);
    const TaskFailure f = pool.parallel_for(16, [&](std::size_t i) {
        const TaskFailure inner = pool.parallel_for(16, [&](std::size_t j) { ++hits[i * 16 + j]; });
        rethrow(inner);
    });
    EXPECT_FALSE(f.error);
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ThreadPool, ReusableAcrossCalls) {
    ThreadPool& pool = shared_pool(3);
    EXPECT_EQ(&pool, &shared_pool(3));
    EXPECT_EQ(pool.size(), 3u);
    for (int round = 0; round < 50; ++round) {
        std::atomic<std::size_t> sum{0};
        pool.parallel_for(100, [&](std::size_t i) { sum += i; });
        EXPECT_EQ(sum.load(), 4950u);
    }
    EXPECT_FALSE(pool.parallel_for(0, [](std::size_t) { throw std::logic_error("never"); }).error);
}

TEST(ThreadPool, ZeroWorkersMeansOne) {
    ThreadPool pool(0);
    EXPECT_EQ(pool.size(), 1u);
}
