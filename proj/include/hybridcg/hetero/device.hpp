#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>

#include "hybridcg/hetero/worker_pool.hpp"
#include "hybridcg/sparse/csr_matrix.hpp"
#include "hybridcg/sparse/row_range_view.hpp"

namespace hybridcg {

enum class DeviceId { Host, Accel };

std::string_view to_string(DeviceId id) noexcept;

struct DeviceConfig {
    std::size_t workers = 1;
    /// Kernel slowdown multiplier; a kernel that computes for t seconds
    /// occupies the device for throttle * t.
    double throttle = 1.0;

    void validate() const;

    friend bool operator==(const DeviceConfig&, const DeviceConfig&) = default;
};

/// Named vectors resident on one device. Only the owning device's stream (or
/// a caller holding the device idle) may touch it.
class DeviceStore {
public:
    Vector& put(const std::string& name, Vector value);
    Vector& at(const std::string& name);
    const Vector& at(const std::string& name) const;
    bool contains(const std::string& name) const { return vectors_.contains(name); }
    void clear() { vectors_.clear(); }

private:
    std::map<std::string, Vector> vectors_;
};

/// One emulated execution context: an in-order task stream (the analogue of
/// a device queue) plus a worker pool for data-parallel kernels. Throttling
/// is realized by idling after each kernel, so a throttled device leaves the
/// CPU to the other device while it "computes".
class Device {
public:
    Device(DeviceId id, DeviceConfig config);
    ~Device();

    Device(const Device&) = delete;
    Device& operator=(const Device&) = delete;

    DeviceId id() const noexcept { return id_; }
    const DeviceConfig& config() const noexcept { return config_; }

    /// Enqueues f on the device stream; tasks run one at a time in order.
    template <typename F>
    auto submit(F&& f) -> std::future<std::invoke_result_t<F>> {
        using R = std::invoke_result_t<F>;
        auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(f));
        auto fut = task->get_future();
        enqueue([task] { (*task)(); });
        return fut;
    }

    /// Runs f as one kernel: measures it, then stalls for the throttle share.
    /// Call from the device stream (or while the device is otherwise idle).
    template <typename F>
    decltype(auto) run_kernel(F&& f) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
            std::forward<F>(f)();
            finish_kernel(start);
        } else {
            auto result = std::forward<F>(f)();
            finish_kernel(start);
            return result;
        }
    }

    /// Splits [0, n) across the device's workers.
    void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
        pool_.parallel_for(n, body);
    }
    RangeRunner range_runner();

    DeviceStore& store() noexcept { return store_; }
    const DeviceStore& store() const noexcept { return store_; }

    /// Total kernel time including throttle stalls since the last reset.
    double busy_seconds() const noexcept;
    void reset_busy() noexcept;

private:
    void enqueue(std::function<void()> task);
    void stream_loop();
    void finish_kernel(std::chrono::steady_clock::time_point start);

    DeviceId id_;
    DeviceConfig config_;
    WorkerPool pool_;
    DeviceStore store_;

    std::atomic<std::int64_t> busy_ns_{0};
    // Sleep overshoot carried into the next stall so the long-run slowdown matches the throttle.
    std::chrono::nanoseconds stall_credit_{0};

    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> queue_;
    bool stop_ = false;
    std::thread stream_;
};

/// The two executors of the emulated node.
struct DevicePair {
    DevicePair(DeviceConfig host_config, DeviceConfig accel_config)
        : host(DeviceId::Host, host_config), accel(DeviceId::Accel, accel_config) {}

    Device host;
    Device accel;
};

}  // namespace hybridcg
