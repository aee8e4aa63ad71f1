#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hybridcg {

using Vector = std::vector<double>;

/// Compressed sparse row matrix with owned storage.
///
/// Every instance satisfies: row_offsets has n_rows+1 entries starting at 0 and
/// ending at nnz, nondecreasing; column indices inside a row are strictly
/// increasing and below n_cols. The constructor validates this and throws
/// std::invalid_argument otherwise. Instances are immutable after construction.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_offsets,
              std::vector<std::size_t> col_indices, std::vector<double> values);

    /// Builds a CSR matrix from unsorted (row, col, value) triplets; duplicates are summed.
    static CsrMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                   std::span<const std::size_t> rows,
                                   std::span<const std::size_t> cols,
                                   std::span<const double> values);

    static CsrMatrix identity(std::size_t n);
    static CsrMatrix diagonal(std::span<const double> diag);

    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t n_cols() const noexcept { return n_cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
    std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
    std::span<const double> values() const noexcept { return values_; }

    std::size_t row_length(std::size_t row) const { return row_offsets_[row + 1] - row_offsets_[row]; }

    /// Stored value at (row, col), or 0 when the position is structurally empty.
    double at(std::size_t row, std::size_t col) const;

    /// True if (row, col) is stored.
    bool contains(std::size_t row, std::size_t col) const;

    /// Copy of rows [first, first+count) as a count x n_cols matrix.
    CsrMatrix row_block(std::size_t first, std::size_t count) const;

    /// Throws unless the matrix is square with every diagonal entry stored and positive.
    void require_solver_ready() const;

    friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
};

}  // namespace hybridcg
