#include "hybridcg/hetero/device.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hybridcg {
namespace {

using Clock = std::chrono::steady_clock;
constexpr std::chrono::nanoseconds kMaxStallCredit = std::chrono::milliseconds(1);

}  // namespace

std::string_view to_string(DeviceId id) noexcept {
    return id == DeviceId::Host ? "host" : "accel";
}

void DeviceConfig::validate() const {
    if (workers < 1) {
        throw std::invalid_argument("device needs at least one worker");
    }
    if (!(throttle >= 1.0) || !std::isfinite(throttle)) {
        throw std::invalid_argument("device throttle must be a finite value >= 1");
    }
}

Vector& DeviceStore::put(const std::string& name, Vector value) {
    auto& slot = vectors_[name];
    slot = std::move(value);
    return slot;
}

Vector& DeviceStore::at(const std::string& name) {
    auto it = vectors_.find(name);
    if (it == vectors_.end()) {
        throw std::out_of_range("vector '" + name + "' is not resident on this device");
    }
    return it->second;
}

const Vector& DeviceStore::at(const std::string& name) const {
    auto it = vectors_.find(name);
    if (it == vectors_.end()) {
        throw std::out_of_range("vector '" + name + "' is not resident on this device");
    }
    return it->second;
}

Device::Device(DeviceId id, DeviceConfig config)
    : id_(id), config_((config.validate(), config)), pool_(config.workers) {
    stream_ = std::thread([this] { stream_loop(); });
}

Device::~Device() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    cv_.notify_all();
    stream_.join();
}

void Device::enqueue(std::function<void()> task) {
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(std::move(task));
    }
    cv_.notify_one();
}

void Device::stream_loop() {
    for (;;) {
        std::function<void()> task;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
            if (queue_.empty()) {
                return;
            }
            task = std::move(queue_.front());
            queue_.pop_front();
        }
        // packaged_task stores exceptions in the future
        task();
    }
}

void Device::finish_kernel(Clock::time_point start) {
    auto now = Clock::now();
    if (config_.throttle > 1.0) {
        const auto compute = now - start;
        const auto stall = std::chrono::duration_cast<std::chrono::nanoseconds>(
                               compute * (config_.throttle - 1.0)) -
                           stall_credit_;
        if (stall > std::chrono::nanoseconds::zero()) {
            const auto target = now + stall;
            std::this_thread::sleep_until(target);
            now = Clock::now();
            stall_credit_ = std::min(kMaxStallCredit,
                                     std::chrono::duration_cast<std::chrono::nanoseconds>(now - target));
        } else {
            stall_credit_ = -stall;
        }
    }
    busy_ns_.fetch_add(std::chrono::duration_cast<std::chrono::nanoseconds>(now - start).count(),
                       std::memory_order_relaxed);
}

RangeRunner Device::range_runner() {
    return [this](std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
        pool_.parallel_for(n, body);
    };
}

double Device::busy_seconds() const noexcept {
    return static_cast<double>(busy_ns_.load(std::memory_order_relaxed)) * 1e-9;
}

void Device::reset_busy() noexcept { busy_ns_.store(0, std::memory_order_relaxed); }

}  // namespace hybridcg
