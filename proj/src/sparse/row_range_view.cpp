#include "hybridcg/sparse/row_range_view.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "hybridcg/errors.hpp"

namespace hybridcg {

RowRangeView RowRangeView::build(const CsrMatrix& a, std::size_t first_row, std::size_t row_count,
                                 std::size_t local_begin, std::size_t local_end) {
    if (first_row + row_count > a.n_rows()) {
        throw std::out_of_range("row range exceeds matrix");
    }
    if (local_begin > local_end || local_end > a.n_cols()) {
        throw std::out_of_range("local column range exceeds matrix");
    }
    RowRangeView view;
    view.first_row_ = first_row;
    view.row_count_ = row_count;
    view.n_cols_ = a.n_cols();
    view.local_begin_ = local_begin;
    view.local_end_ = local_end;

    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    const auto nnz = offsets[first_row + row_count] - offsets[first_row];
    view.row_offsets_.assign(row_count + 1, 0);
    view.split_offsets_.resize(row_count);
    view.col_indices_.reserve(nnz);
    view.values_.reserve(nnz);

    for (std::size_t i = 0; i < row_count; ++i) {
        const auto begin = offsets[first_row + i];
        const auto end = offsets[first_row + i + 1];
        // stable partition: local columns keep their order, then remote ones
        for (auto k = begin; k < end; ++k) {
            if (view.is_local_column(cols[k])) {
                view.col_indices_.push_back(cols[k]);
                view.values_.push_back(vals[k]);
            }
        }
        view.split_offsets_[i] = view.col_indices_.size();
        for (auto k = begin; k < end; ++k) {
            if (!view.is_local_column(cols[k])) {
                view.col_indices_.push_back(cols[k]);
                view.values_.push_back(vals[k]);
            }
        }
        view.local_nnz_ += view.split_offsets_[i] - (view.row_offsets_[i]);
        view.row_offsets_[i + 1] = view.col_indices_.size();
    }
    return view;
}

void PhasedSegment::reset() {
    std::fill(values_.begin(), values_.end(), 0.0);
    completed_ = 0;
}

void spmv_phase(const RowRangeView& view, SpmvPhase phase, std::span<const double> x,
                PhasedSegment& y, const RangeRunner& runner) {
    if (x.size() != view.n_cols()) {
        throw DimensionMismatch("spmv_phase input has " + std::to_string(x.size()) +
                                " entries, view has " + std::to_string(view.n_cols()) + " columns");
    }
    if (y.values_.size() != view.row_count()) {
        throw DimensionMismatch("spmv_phase output segment does not match view rows");
    }
    if (phase == SpmvPhase::Remote && y.completed_ != 1) {
        throw ContractViolation("spmv phase 2 requires phase 1 on the same segment first");
    }

    const auto offsets = view.row_offsets();
    const auto splits = view.split_offsets();
    const auto cols = view.col_indices();
    const auto vals = view.values();
    auto out = std::span<double>(y.values_);

    auto body = [&](std::size_t row_begin, std::size_t row_end) {
        if (phase == SpmvPhase::Local) {
            for (auto i = row_begin; i < row_end; ++i) {
                double sum = 0.0;
                for (auto k = offsets[i]; k < splits[i]; ++k) {
                    sum += vals[k] * x[cols[k]];
                }
                out[i] = sum;
            }
        } else {
            for (auto i = row_begin; i < row_end; ++i) {
                double sum = out[i];
                for (auto k = splits[i]; k < offsets[i + 1]; ++k) {
                    sum += vals[k] * x[cols[k]];
                }
                out[i] = sum;
            }
        }
    };
    if (runner) {
        runner(view.row_count(), body);
    } else {
        body(0, view.row_count());
    }
    y.completed_ = phase == SpmvPhase::Local ? 1 : 2;
}

}  // namespace hybridcg
