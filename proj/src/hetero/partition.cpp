#include "hybridcg/hetero/partition.hpp"

#include <algorithm>
#include <stdexcept>

#include "hybridcg/errors.hpp"

namespace hybridcg {

std::size_t decompose_1d(const CsrMatrix& a, std::size_t nnz_host_target) {
    if (nnz_host_target > a.nnz()) {
        throw std::invalid_argument("host nonzero target exceeds nnz");
    }
    const auto offsets = a.row_offsets();
    // offsets[k] is the nonzero count of rows 0..k-1
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), nnz_host_target);
    return static_cast<std::size_t>(it - offsets.begin()) - 1;
}

Partition decompose_2d(const CsrMatrix& a, std::size_t n_host_rows) {
    if (a.n_rows() != a.n_cols()) {
        throw DimensionMismatch("decomposition needs a square matrix");
    }
    const auto n = a.n_rows();
    if (n_host_rows > n) {
        throw std::invalid_argument("host row count exceeds N");
    }
    Partition p;
    p.n_host_rows = n_host_rows;
    p.n_accel_rows = n - n_host_rows;
    p.host_view = RowRangeView::build(a, 0, n_host_rows, 0, n_host_rows);
    p.accel_view = RowRangeView::build(a, n_host_rows, p.n_accel_rows, n_host_rows, n);
    p.nnz1_host = p.host_view.local_nnz();
    p.nnz2_host = p.host_view.remote_nnz();
    p.nnz1_accel = p.accel_view.local_nnz();
    p.nnz2_accel = p.accel_view.remote_nnz();
    return p;
}

}  // namespace hybridcg
