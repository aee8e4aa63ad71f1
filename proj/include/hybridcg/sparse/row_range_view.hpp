#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>

#include "hybridcg/sparse/csr_matrix.hpp"

namespace hybridcg {

enum class SpmvPhase { Local = 1, Remote = 2 };

/// A contiguous block of rows whose entries are reordered so that, inside each
/// row, columns in the designated local range come first (phase 1) and all
/// other columns follow (phase 2). The reordering is done once on a private
/// copy of the rows; the source matrix is never modified.
class RowRangeView {
public:
    RowRangeView() = default;

    /// Rows [first_row, first_row+row_count) of `a`, with local columns
    /// [local_begin, local_end).
    static RowRangeView build(const CsrMatrix& a, std::size_t first_row, std::size_t row_count,
                              std::size_t local_begin, std::size_t local_end);

    std::size_t first_row() const noexcept { return first_row_; }
    std::size_t row_count() const noexcept { return row_count_; }
    std::size_t n_cols() const noexcept { return n_cols_; }
    std::size_t local_begin() const noexcept { return local_begin_; }
    std::size_t local_end() const noexcept { return local_end_; }

    /// Per-row CSR offsets into col_indices()/values(), length row_count+1.
    std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
    /// Per-row boundary between phase-1 and phase-2 entries, absolute into col_indices().
    std::span<const std::size_t> split_offsets() const noexcept { return split_offsets_; }
    std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
    std::span<const double> values() const noexcept { return values_; }

    std::size_t local_nnz() const noexcept { return local_nnz_; }
    std::size_t remote_nnz() const noexcept { return values_.size() - local_nnz_; }

    bool is_local_column(std::size_t col) const noexcept {
        return col >= local_begin_ && col < local_end_;
    }

private:
    std::size_t first_row_ = 0;
    std::size_t row_count_ = 0;
    std::size_t n_cols_ = 0;
    std::size_t local_begin_ = 0;
    std::size_t local_end_ = 0;
    std::size_t local_nnz_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> split_offsets_;
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
};

/// Splits [0, n) into chunks and invokes body(begin, end) on each. Used to
/// hand row loops to a worker pool; the default runs the whole range inline.
using RangeRunner =
    std::function<void(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body)>;

/// Output segment of a two-phase SPMV over one RowRangeView. Tracks which
/// phases have run so that phase 2 cannot precede phase 1.
class PhasedSegment {
public:
    PhasedSegment() = default;
    explicit PhasedSegment(std::size_t rows) : values_(rows, 0.0) {}

    std::span<const double> values() const noexcept { return values_; }
    int completed_phase() const noexcept { return completed_; }

    /// Zeroes the segment and clears the phase state.
    void reset();

private:
    friend void spmv_phase(const RowRangeView&, SpmvPhase, std::span<const double>, PhasedSegment&,
                           const RangeRunner&);

    Vector values_;
    int completed_ = 0;
};

/// Phase 1 writes y = (local part of A) x; x need only be valid on the local
/// column range. Phase 2 adds the remote part and throws ContractViolation
/// unless phase 1 ran on the segment since the last phase 2 or reset.
/// `x` is indexed by global column.
void spmv_phase(const RowRangeView& view, SpmvPhase phase, std::span<const double> x,
                PhasedSegment& y, const RangeRunner& runner = {});

}  // namespace hybridcg
