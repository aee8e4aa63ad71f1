#pragma once

#include <chrono>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "hybridcg/hetero/device.hpp"

namespace hybridcg {

/// A slice of a named vector to move; count = npos means "to the end". The
/// slice lands at the same offset of `dst_name` (defaults to `name`).
struct TransferItem {
    std::string name;
    std::size_t offset = 0;
    std::size_t count = std::numeric_limits<std::size_t>::max();
    std::string dst_name = {};

    const std::string& destination() const noexcept { return dst_name.empty() ? name : dst_name; }
};

struct ChannelConfig {
    std::chrono::nanoseconds latency{0};
    /// Bytes per second; 0 means unlimited.
    double bandwidth = 0.0;

    friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

class TransferChannel;

/// An in-flight copy. Payload is captured when the copy is issued; the
/// destination sees it only after TransferChannel::wait.
class CopyHandle {
public:
    CopyHandle() = default;
    bool valid() const noexcept { return state_ != nullptr; }
    std::size_t values() const noexcept;

private:
    friend class TransferChannel;
    struct State;
    std::shared_ptr<State> state_;
};

/// Emulated asynchronous copy path between two device stores. A copy of B
/// bytes completes max(latency, B / bandwidth) after it is issued; the delay
/// is simulated by the waiter sleeping until the completion time, so issuing
/// costs only the snapshot.
class TransferChannel {
public:
    TransferChannel() = default;
    explicit TransferChannel(ChannelConfig config) : config_(config) {}

    TransferChannel(const TransferChannel&) = delete;
    TransferChannel& operator=(const TransferChannel&) = delete;

    const ChannelConfig& config() const noexcept { return config_; }

    /// Snapshots the named slices of src's store and returns immediately.
    /// Call from src's context. Throws std::out_of_range for unknown names and
    /// ContractViolation if a destination name is already in flight on this channel.
    CopyHandle copy_async(Device& src, Device& dst, const std::vector<TransferItem>& items);

    /// Blocks until the copy's completion time, then writes the payload into
    /// the destination store at the same offsets. Call from dst's context.
    /// Returns the time spent blocked. Waiting twice is a no-op.
    std::chrono::nanoseconds wait(const CopyHandle& handle);

    std::chrono::nanoseconds simulated_delay(std::size_t bytes) const;

    std::size_t values_moved() const;
    std::size_t copies_issued() const;
    void reset_counters();

private:
    ChannelConfig config_;
    mutable std::mutex mutex_;
    std::set<std::string> in_flight_;
    std::size_t values_moved_ = 0;
    std::size_t copies_issued_ = 0;
};

/// One channel per direction, used by the data-parallel hybrid.
struct ChannelPair {
    explicit ChannelPair(ChannelConfig config = {}) : to_accel(config), to_host(config) {}

    TransferChannel to_accel;
    TransferChannel to_host;
};

}  // namespace hybridcg
