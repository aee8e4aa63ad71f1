#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>

#include "hybridcg/hetero/device.hpp"
#include "hybridcg/hetero/partition.hpp"
#include "hybridcg/hetero/performance_model.hpp"
#include "hybridcg/hetero/transfer.hpp"
#include "hybridcg/solvers/types.hpp"
#include "hybridcg/sparse/jacobi.hpp"

namespace hybridcg {

/// Vector traffic of one hybrid solve, split into the per-iteration copies and
/// the one-off copies made during setup and final gathering.
struct TransferStats {
    std::size_t iteration_values = 0;
    std::size_t iteration_copies = 0;
    std::size_t setup_values = 0;
    std::size_t setup_copies = 0;

    friend bool operator==(const TransferStats&, const TransferStats&) = default;
};

struct HybridResult {
    Vector x;
    SolveReport report;
    TransferStats transfers;
    std::optional<DeviceProfile> profile;
    std::optional<PartitionSummary> partition;
};

/// Invoked between iterations, while both devices are idle, with the number
/// of completed iterations. Lets tests inspect device stores.
using HybridObserver = std::function<void(std::size_t iteration, Device& host, Device& accel)>;

struct Hybrid3Options {
    /// Skip profiling and use this host share instead.
    std::optional<double> pinned_r_host;
    /// Profile on the first R rows only (0 = whole matrix).
    std::size_t profile_rows = 0;
    std::size_t profile_runs = 5;
};

/// Task-parallel hybrid with three vector copies per iteration. The
/// accelerator holds the matrix and every vector and runs the vector updates,
/// preconditioner and SPMV; w, r and u are copied to the host, which computes
/// the three dot products while the accelerator proceeds.
HybridResult hybrid1_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                           const JacobiPreconditioner& pc, const SolverConfig& cfg,
                           DevicePair& devices, TransferChannel& channel,
                           const HybridObserver& observer = {});

/// Task-parallel hybrid with one vector copy per iteration. The host keeps
/// replicas of the vectors the dot products need and updates them itself;
/// only n travels from the accelerator each iteration.
HybridResult hybrid2_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                           const JacobiPreconditioner& pc, const SolverConfig& cfg,
                           DevicePair& devices, TransferChannel& channel,
                           const HybridObserver& observer = {});

/// Data-parallel hybrid. Rows are split by measured (or pinned) relative SPMV
/// speed, each device works only on its own rows and vector slices, and the
/// two halves of m are exchanged every iteration while local-column SPMV
/// work proceeds. A split that leaves one device empty runs the reference
/// pipelined solver on the other device with no transfers.
HybridResult hybrid3_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                           const JacobiPreconditioner& pc, const SolverConfig& cfg,
                           DevicePair& devices, ChannelPair& channels,
                           const Hybrid3Options& options = {}, const HybridObserver& observer = {});

}  // namespace hybridcg
