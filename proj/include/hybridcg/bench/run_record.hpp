#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <json.hpp>

#include "hybridcg/hetero/device.hpp"
#include "hybridcg/hetero/hybrid.hpp"
#include "hybridcg/hetero/partition.hpp"
#include "hybridcg/hetero/performance_model.hpp"
#include "hybridcg/hetero/transfer.hpp"
#include "hybridcg/solvers/types.hpp"

namespace hybridcg::bench {

/// Device and channel configuration a run used.
struct DeviceSnapshot {
    DeviceConfig host;
    DeviceConfig accel;
    ChannelConfig channel;

    friend bool operator==(const DeviceSnapshot&, const DeviceSnapshot&) = default;
};

/// One solve of one problem by one strategy.
struct RunRecord {
    std::string problem;
    std::size_t n = 0;
    std::size_t nnz = 0;
    std::string strategy;
    double tolerance = 1e-5;
    std::size_t max_iterations = 10000;
    SolveReport report;
    TransferStats transfers;
    DeviceSnapshot devices;
    std::optional<DeviceProfile> profile;
    std::optional<PartitionSummary> partition;
    /// ISO-8601 UTC.
    std::string timestamp;
    /// Set when the run ended in an error rather than a result.
    std::optional<std::string> error;
};

/// Field-by-field equality in which NaN equals NaN.
bool same_record(const RunRecord& a, const RunRecord& b);

/// NaN serializes as null and reads back as NaN.
nlohmann::json to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DeviceProfile& profile);
DeviceProfile profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PartitionSummary& partition);
PartitionSummary partition_from_json(const nlohmann::json& j);

std::string utc_timestamp();

}  // namespace hybridcg::bench
