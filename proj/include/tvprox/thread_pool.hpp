#pragma once

// A small persistent worker pool with a blocking parallel_for. Calls made
// from inside a pool task run inline, so nested parallel regions cannot
// deadlock.

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace tvprox {

/// Error raised by one index of a parallel_for, tagged with that index.
struct TaskFailure {
    std::size_t index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr error;
};

class ThreadPool {
public:
    explicit ThreadPool(std::size_t workers) : size_(workers == 0 ? 1 : workers) {
        for (std::size_t i = 1; i < size_; ++i) threads_.emplace_back([this] { worker_loop(); });
    }

    ~ThreadPool() {
        {
            std::lock_guard lk(mu_);
            stop_ = true;
        }
        wake_.notify_all();
        for (auto& t : threads_) t.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t size() const noexcept { return size_; }

    /// Runs body(i) for i in [0, count). Every index runs even if some
    /// throw; afterwards the failure with the lowest index is returned
    /// (index = max if none failed).
    TaskFailure parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
        if (count == 0) return {};
        if (size_ == 1 || count == 1 || inside_task()) return run_serial(count, body);

        std::lock_guard submit(submit_mu_);
        Job job{&body, count};
        {
            std::lock_guard lk(mu_);
            job_ = &job;
            ++generation_;
        }
        wake_.notify_all();
        work_on(job);
        {
            std::unique_lock lk(mu_);
            done_.wait(lk, [&] { return job.finished == job.count && job.active == 0; });
            job_ = nullptr;
        }
        return job.failure;
    }

private:
    struct Job {
        const std::function<void(std::size_t)>* body;
        std::size_t count;
        std::atomic<std::size_t> next{0};
        std::size_t finished = 0;  // guarded by mu_
        std::size_t active = 0;    // workers currently attached, guarded by mu_
        std::mutex failure_mu{};
        TaskFailure failure{};
    };

    static bool& inside_task() {
        thread_local bool flag = false;
        return flag;
    }

    static TaskFailure run_serial(std::size_t count, const std::function<void(std::size_t)>& body) {
        TaskFailure failure;
        for (std::size_t i = 0; i < count; ++i) {
            try {
                body(i);
            } catch (...) {
                if (i < failure.index) failure = {i, std::current_exception()};
            }
        }
        return failure;
    }

    void work_on(Job& job) {
        const bool was_inside = inside_task();
        inside_task() = true;
        std::size_t local_done = 0;
        for (std::size_t i; (i = job.next.fetch_add(1)) < job.count; ++local_done) {
            try {
                (*job.body)(i);
            } catch (...) {
                std::lock_guard lk(job.failure_mu);
                if (i < job.failure.index) job.failure = {i, std::current_exception()};
            }
        }
        inside_task() = was_inside;
        std::lock_guard lk(mu_);
        job.finished += local_done;
        if (job.finished == job.count) done_.notify_all();
    }

    void worker_loop() {
        std::size_t seen = 0;
        for (;;) {
            Job* job;
            {
                std::unique_lock lk(mu_);
                wake_.wait(lk, [&] { return stop_ || (job_ != nullptr && generation_ != seen); });
                if (stop_) return;
                seen = generation_;
                job = job_;
                ++job->active;
            }
            work_on(*job);
            {
                std::lock_guard lk(mu_);
                --job->active;
            }
            done_.notify_all();
        }
    }

    std::size_t size_;
    std::vector<std::thread> threads_;
    std::mutex submit_mu_;
    std::mutex mu_;
    std::condition_variable wake_, done_;
    Job* job_ = nullptr;
    std::size_t generation_ = 0;
    bool stop_ = false;
};

/// Process-wide pool with the given number of workers, created on first use.
inline ThreadPool& shared_pool(std::size_t workers) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<ThreadPool>> pools;
    if (workers == 0) workers = 1;
    std::lock_guard lk(mu);
    auto& slot = pools[workers];
    if (!slot) slot = std::make_unique<ThreadPool>(workers);
    return *slot;
}

/// Rethrows a recorded failure, if any.
inline void rethrow(const TaskFailure& f) {
    if (f.error) std::rethrow_exception(f.error);
}

}  // namespace tvprox
