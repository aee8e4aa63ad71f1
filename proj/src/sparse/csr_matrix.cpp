#include "hybridcg/sparse/csr_matrix.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hybridcg/errors.hpp"

namespace hybridcg {

CsrMatrix::CsrMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_offsets,
                     std::vector<std::size_t> col_indices, std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
    if (row_offsets_.size() != n_rows_ + 1) {
        throw std::invalid_argument("row_offsets must have n_rows+1 entries");
    }
    if (col_indices_.size() != values_.size()) {
        throw std::invalid_argument("col_indices and values differ in length");
    }
    if (row_offsets_.front() != 0 || row_offsets_.back() != values_.size()) {
        throw std::invalid_argument("row_offsets must start at 0 and end at nnz");
    }
    for (std::size_t i = 0; i < n_rows_; ++i) {
        const auto begin = row_offsets_[i];
        const auto end = row_offsets_[i + 1];
        if (end < begin) {
            throw std::invalid_argument("row_offsets decrease at row " + std::to_string(i));
        }
        for (auto k = begin; k < end; ++k) {
            if (col_indices_[k] >= n_cols_) {
                throw std::invalid_argument("column index out of range in row " + std::to_string(i));
            }
            if (k > begin && col_indices_[k] <= col_indices_[k - 1]) {
                throw std::invalid_argument("columns not strictly increasing in row " +
                                            std::to_string(i));
            }
        }
    }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                   std::span<const std::size_t> rows,
                                   std::span<const std::size_t> cols,
                                   std::span<const double> values) {
    if (rows.size() != cols.size() || rows.size() != values.size()) {
        throw DimensionMismatch("triplet arrays differ in length");
    }
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // stable so that duplicates are summed in input order
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rows[a] != rows[b] ? rows[a] < rows[b] : cols[a] < cols[b];
    });

    std::vector<std::size_t> offsets(n_rows + 1, 0);
    std::vector<std::size_t> out_cols;
    std::vector<double> out_vals;
    out_cols.reserve(order.size());
    out_vals.reserve(order.size());
    std::size_t last_row = 0;
    bool have_last = false;
    for (auto idx : order) {
        const auto r = rows[idx];
        const auto c = cols[idx];
        if (r >= n_rows || c >= n_cols) {
            throw std::invalid_argument("triplet index out of range");
        }
        if (have_last && r == last_row && c == out_cols.back()) {
            out_vals.back() += values[idx];
            continue;
        }
        out_cols.push_back(c);
        out_vals.push_back(values[idx]);
        ++offsets[r + 1];
        last_row = r;
        have_last = true;
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return CsrMatrix(n_rows, n_cols, std::move(offsets), std::move(out_cols), std::move(out_vals));
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    std::vector<double> ones(n, 1.0);
    return diagonal(ones);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> diag) {
    const auto n = diag.size();
    std::vector<std::size_t> offsets(n + 1);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    std::vector<std::size_t> cols(n);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return CsrMatrix(n, n, std::move(offsets), std::move(cols), {diag.begin(), diag.end()});
}

double CsrMatrix::at(std::size_t row, std::size_t col) const {
    const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row]);
    const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row + 1]);
    const auto it = std::lower_bound(first, last, col);
    if (it == last || *it != col) {
        return 0.0;
    }
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

bool CsrMatrix::contains(std::size_t row, std::size_t col) const {
    const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row]);
    const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row + 1]);
    return std::binary_search(first, last, col);
}

CsrMatrix CsrMatrix::row_block(std::size_t first, std::size_t count) const {
    if (first + count > n_rows_) {
        throw std::out_of_range("row block exceeds matrix");
    }
    const auto base = row_offsets_[first];
    const auto end = row_offsets_[first + count];
    std::vector<std::size_t> offsets(count + 1);
    for (std::size_t i = 0; i <= count; ++i) {
        offsets[i] = row_offsets_[first + i] - base;
    }
    std::vector<std::size_t> cols(col_indices_.begin() + static_cast<std::ptrdiff_t>(base),
                                  col_indices_.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<double> vals(values_.begin() + static_cast<std::ptrdiff_t>(base),
                             values_.begin() + static_cast<std::ptrdiff_t>(end));
    return CsrMatrix(count, n_cols_, std::move(offsets), std::move(cols), std::move(vals));
}

void CsrMatrix::require_solver_ready() const {
    if (n_rows_ != n_cols_) {
        throw DimensionMismatch("solver matrix must be square");
    }
    for (std::size_t i = 0; i < n_rows_; ++i) {
        if (!contains(i, i)) {
            throw SetupError(i, "diagonal entry missing");
        }
        if (!(at(i, i) > 0.0)) {
            throw SetupError(i, "diagonal entry not positive");
        }
    }
}

}  // namespace hybridcg
