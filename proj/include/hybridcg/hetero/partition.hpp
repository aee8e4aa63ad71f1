#pragma once

#include <cstddef>

#include "hybridcg/sparse/csr_matrix.hpp"
#include "hybridcg/sparse/row_range_view.hpp"

namespace hybridcg {

/// Entry counts of a host/accel split, without the views.
struct PartitionSummary {
    std::size_t n_host_rows = 0;
    std::size_t n_accel_rows = 0;
    std::size_t nnz1_host = 0;
    std::size_t nnz2_host = 0;
    std::size_t nnz1_accel = 0;
    std::size_t nnz2_accel = 0;

    friend bool operator==(const PartitionSummary&, const PartitionSummary&) = default;
};

/// Host owns rows [0, n_host_rows), the accelerator the rest. Each view keeps
/// phase-1 entries (columns the device owns) ahead of phase-2 entries
/// (columns owned by the other device).
struct Partition {
    std::size_t n_host_rows = 0;
    std::size_t n_accel_rows = 0;
    RowRangeView host_view;
    RowRangeView accel_view;
    std::size_t nnz1_host = 0;
    std::size_t nnz2_host = 0;
    std::size_t nnz1_accel = 0;
    std::size_t nnz2_accel = 0;

    PartitionSummary summary() const {
        return {n_host_rows, n_accel_rows, nnz1_host, nnz2_host, nnz1_accel, nnz2_accel};
    }
};

/// Largest k with nnz(rows 0..k-1) <= nnz_host_target.
std::size_t decompose_1d(const CsrMatrix& a, std::size_t nnz_host_target);

/// Builds both row views for a host block of n_host_rows rows.
Partition decompose_2d(const CsrMatrix& a, std::size_t n_host_rows);

}  // namespace hybridcg
