#include "hybridcg/hetero/transfer.hpp"

#include <algorithm>
#include <thread>

#include "hybridcg/errors.hpp"

namespace hybridcg {

struct CopyHandle::State {
    struct Piece {
        std::string name;
        std::size_t offset;
        Vector data;
    };

    TransferChannel* channel = nullptr;
    Device* dst = nullptr;
    std::vector<Piece> pieces;
    std::size_t values = 0;
    std::chrono::steady_clock::time_point ready_at;
    bool delivered = false;
};

std::size_t CopyHandle::values() const noexcept { return state_ ? state_->values : 0; }

std::chrono::nanoseconds TransferChannel::simulated_delay(std::size_t bytes) const {
    auto delay = config_.latency;
    if (config_.bandwidth > 0.0) {
        const auto wire = std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::duration<double>(static_cast<double>(bytes) / config_.bandwidth));
        delay = std::max(delay, wire);
    }
    return delay;
}

CopyHandle TransferChannel::copy_async(Device& src, Device& dst,
                                       const std::vector<TransferItem>& items) {
    auto state = std::make_shared<CopyHandle::State>();
    state->channel = this;
    state->dst = &dst;
    state->pieces.reserve(items.size());
    for (const auto& item : items) {
        const Vector& source = src.store().at(item.name);
        if (item.offset > source.size()) {
            throw std::out_of_range("transfer offset beyond vector '" + item.name + "'");
        }
        const auto count = std::min(item.count, source.size() - item.offset);
        const auto first = source.begin() + static_cast<std::ptrdiff_t>(item.offset);
        state->pieces.push_back(
            {item.destination(), item.offset, Vector(first, first + static_cast<std::ptrdiff_t>(count))});
        state->values += count;
    }
    {
        std::lock_guard lock(mutex_);
        for (const auto& item : items) {
            if (in_flight_.contains(item.destination())) {
                throw ContractViolation("copy into '" + item.destination() +
                                        "' already in flight on this channel");
            }
        }
        for (const auto& item : items) {
            in_flight_.insert(item.destination());
        }
        values_moved_ += state->values;
        ++copies_issued_;
    }
    state->ready_at = std::chrono::steady_clock::now() + simulated_delay(state->values * sizeof(double));

    CopyHandle handle;
    handle.state_ = std::move(state);
    return handle;
}

std::chrono::nanoseconds TransferChannel::wait(const CopyHandle& handle) {
    if (!handle.valid()) {
        throw ContractViolation("wait on an empty copy handle");
    }
    auto& state = *handle.state_;
    if (state.channel != this) {
        throw ContractViolation("copy handle belongs to another channel");
    }
    if (state.delivered) {
        return std::chrono::nanoseconds::zero();
    }
    const auto start = std::chrono::steady_clock::now();
    if (state.ready_at > start) {
        std::this_thread::sleep_until(state.ready_at);
    }
    const auto waited = std::chrono::steady_clock::now() - start;

    auto& store = state.dst->store();
    for (auto& piece : state.pieces) {
        if (!store.contains(piece.name)) {
            store.put(piece.name, Vector(piece.offset + piece.data.size(), 0.0));
        }
        auto& target = store.at(piece.name);
        if (target.size() < piece.offset + piece.data.size()) {
            target.resize(piece.offset + piece.data.size(), 0.0);
        }
        std::copy(piece.data.begin(), piece.data.end(),
                  target.begin() + static_cast<std::ptrdiff_t>(piece.offset));
    }
    state.delivered = true;
    {
        std::lock_guard lock(mutex_);
        for (const auto& piece : state.pieces) {
            in_flight_.erase(piece.name);
        }
    }
    return std::chrono::duration_cast<std::chrono::nanoseconds>(waited);
}

std::size_t TransferChannel::values_moved() const {
    std::lock_guard lock(mutex_);
    return values_moved_;
}

std::size_t TransferChannel::copies_issued() const {
    std::lock_guard lock(mutex_);
    return copies_issued_;
}

void TransferChannel::reset_counters() {
    std::lock_guard lock(mutex_);
    values_moved_ = 0;
    copies_issued_ = 0;
}

}  // namespace hybridcg
