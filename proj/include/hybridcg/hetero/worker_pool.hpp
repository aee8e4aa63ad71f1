#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hybridcg {

/// Fixed set of workers that split index ranges into contiguous, equally sized
/// chunks. The calling thread executes chunk 0, so a pool of size 1 owns no
/// threads. Chunk boundaries depend only on (n, size()), which keeps results
/// reproducible when each index is computed independently.
class WorkerPool {
public:
    explicit WorkerPool(std::size_t workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    std::size_t size() const noexcept { return workers_; }

    /// Runs body(begin, end) over a partition of [0, n) and returns once every
    /// chunk is done. Ranges shorter than the grain run inline.
    void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

    static constexpr std::size_t kGrain = 4096;

private:
    void helper_loop(std::size_t index);

    std::size_t workers_;
    std::vector<std::thread> helpers_;
    std::mutex mutex_;
    std::condition_variable start_cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
    std::size_t job_n_ = 0;
    std::uint64_t generation_ = 0;
    std::size_t pending_ = 0;
    std::exception_ptr error_;
    bool stop_ = false;
};

}  // namespace hybridcg
