#pragma once

#include <cstddef>

#include "hybridcg/hetero/device.hpp"
#include "hybridcg/sparse/csr_matrix.hpp"

namespace hybridcg {

/// Relative SPMV throughput of the two devices.
///
/// s_d = profiled_nnz / t_d and r_host = s_host / (s_host + s_accel);
/// r_accel is stored as 1 - r_host so the pair always sums to one.
struct DeviceProfile {
    double t_host = 0.0;
    double t_accel = 0.0;
    double s_host = 0.0;
    double s_accel = 0.0;
    double r_host = 0.5;
    double r_accel = 0.5;
    std::size_t profiled_nnz = 0;
    /// A measured time was zero and had to be clamped to the timer resolution.
    bool degenerate = false;
    /// r_host was supplied by the caller rather than measured.
    bool pinned = false;

    /// Applies the throughput formulas to given times (seconds).
    static DeviceProfile from_times(double t_host, double t_accel, std::size_t profiled_nnz);
    /// A profile with r_host fixed; times and speeds are left NaN.
    static DeviceProfile pinned_ratio(double r_host, std::size_t profiled_nnz);

    friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

/// Times `runs` full SPMVs of `a` on each device (host first, then accel)
/// after one untimed warm-up run and keeps the mean per device.
DeviceProfile profile_devices(const CsrMatrix& a, Device& host, Device& accel, std::size_t runs = 5);

/// floor(nnz * r_host): the nonzero budget for the host.
std::size_t derive_split(const DeviceProfile& profile, std::size_t nnz);

}  // namespace hybridcg
