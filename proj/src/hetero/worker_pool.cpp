#include "hybridcg/hetero/worker_pool.hpp"

#include <stdexcept>

namespace hybridcg {
namespace {

std::pair<std::size_t, std::size_t> chunk(std::size_t n, std::size_t parts, std::size_t index) {
    return {n * index / parts, n * (index + 1) / parts};
}

}  // namespace

WorkerPool::WorkerPool(std::size_t workers) : workers_(workers) {
    if (workers == 0) {
        throw std::invalid_argument("worker pool needs at least one worker");
    }
    helpers_.reserve(workers - 1);
    for (std::size_t i = 1; i < workers; ++i) {
        helpers_.emplace_back([this, i] { helper_loop(i); });
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : helpers_) {
        t.join();
    }
}

void WorkerPool::parallel_for(std::size_t n,
                              const std::function<void(std::size_t, std::size_t)>& body) {
    if (helpers_.empty() || n < kGrain) {
        body(0, n);
        return;
    }
    const auto parts = size();
    {
        std::lock_guard lock(mutex_);
        job_ = &body;
        job_n_ = n;
        pending_ = helpers_.size();
        error_ = nullptr;
        ++generation_;
    }
    start_cv_.notify_all();

    std::exception_ptr local_error;
    try {
        auto [begin, end] = chunk(n, parts, 0);
        body(begin, end);
    } catch (...) {
        local_error = std::current_exception();
    }

    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
    if (local_error) {
        std::rethrow_exception(local_error);
    }
    if (error_) {
        std::rethrow_exception(error_);
    }
}

void WorkerPool::helper_loop(std::size_t index) {
    std::uint64_t seen = 0;
    for (;;) {
        const std::function<void(std::size_t, std::size_t)>* job = nullptr;
        std::size_t n = 0;
        {
            std::unique_lock lock(mutex_);
            start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) {
                return;
            }
            seen = generation_;
            job = job_;
            n = job_n_;
        }
        std::exception_ptr error;
        try {
            auto [begin, end] = chunk(n, workers_, index);
            (*job)(begin, end);
        } catch (...) {
            error = std::current_exception();
        }
        {
            std::lock_guard lock(mutex_);
            if (error && !error_) {
                error_ = error;
            }
            if (--pending_ == 0) {
                done_cv_.notify_one();
            }
        }
    }
}

}  // namespace hybridcg
