#include "hybridcg/hetero/performance_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hybridcg/sparse/kernels.hpp"

namespace hybridcg {
namespace {

double timer_resolution() {
    using Period = std::chrono::steady_clock::period;
    return static_cast<double>(Period::num) / static_cast<double>(Period::den);
}

double time_spmv(const CsrMatrix& a, Device& device, std::size_t runs) {
    return device
        .submit([&] {
            Vector x(a.n_cols(), 1.0);
            Vector y(a.n_rows());
            auto once = [&] {
                device.run_kernel([&] {
                    device.parallel_for(a.n_rows(), [&](std::size_t first, std::size_t last) {
                        spmv_rows(a, x, y, first, last);
                    });
                });
            };
            once();
            const auto start = std::chrono::steady_clock::now();
            for (std::size_t run = 0; run < runs; ++run) {
                once();
            }
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() /
                   static_cast<double>(runs);
        })
        .get();
}

}  // namespace

DeviceProfile DeviceProfile::from_times(double t_host, double t_accel, std::size_t profiled_nnz) {
    if (!(t_host >= 0.0) || !(t_accel >= 0.0)) {
        throw std::invalid_argument("profile times must be non-negative");
    }
    DeviceProfile p;
    const double floor_time = timer_resolution();
    if (t_host <= 0.0 || t_accel <= 0.0) {
        p.degenerate = true;
    }
    p.t_host = std::max(t_host, floor_time);
    p.t_accel = std::max(t_accel, floor_time);
    p.profiled_nnz = profiled_nnz;
    const auto nnz = static_cast<double>(profiled_nnz);
    p.s_host = nnz / p.t_host;
    p.s_accel = nnz / p.t_accel;
    if (profiled_nnz == 0) {
        // no work measured: fall back to an even split
        p.degenerate = true;
        p.r_host = 0.5;
    } else {
        p.r_host = p.s_host / (p.s_host + p.s_accel);
    }
    p.r_accel = 1.0 - p.r_host;
    return p;
}

DeviceProfile DeviceProfile::pinned_ratio(double r_host, std::size_t profiled_nnz) {
    if (!(r_host >= 0.0 && r_host <= 1.0)) {
        throw std::invalid_argument("pinned host ratio must lie in [0, 1]");
    }
    DeviceProfile p;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    p.t_host = p.t_accel = p.s_host = p.s_accel = nan;
    p.r_host = r_host;
    p.r_accel = 1.0 - r_host;
    p.profiled_nnz = profiled_nnz;
    p.pinned = true;
    return p;
}

DeviceProfile profile_devices(const CsrMatrix& a, Device& host, Device& accel, std::size_t runs) {
    if (runs < 1) {
        throw std::invalid_argument("profiling needs at least one run");
    }
    const double t_host = time_spmv(a, host, runs);
    const double t_accel = time_spmv(a, accel, runs);
    return DeviceProfile::from_times(t_host, t_accel, a.nnz());
}

std::size_t derive_split(const DeviceProfile& profile, std::size_t nnz) {
    const double target = std::floor(static_cast<double>(nnz) * profile.r_host);
    return std::min(nnz, static_cast<std::size_t>(std::max(0.0, target)));
}

}  // namespace hybridcg
