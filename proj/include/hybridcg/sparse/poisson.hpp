#pragma once

#include <cstddef>
#include <cstdint>

#include "hybridcg/sparse/csr_matrix.hpp"

namespace hybridcg {

struct StencilSize {
    std::uint64_t n_rows;
    std::uint64_t nnz;
};

/// Closed-form size of the 125-point Poisson matrix on an n^3 grid:
/// N = n^3 and nnz = (5n-6)^3, without materializing anything.
StencilSize poisson125_size(std::size_t grid_side);

/// Default budget for generate_poisson125: 4 GiB of CSR storage.
inline constexpr std::uint64_t kDefaultPoissonBudgetBytes = std::uint64_t{4} << 30;

/// 125-point (5x5x5 box) stencil on an n^3 grid, boundary clipped, x-fastest
/// linearization. Off-diagonals are -1 and each diagonal is its row's
/// off-diagonal count plus one, so every row sums to 1 and the matrix is SPD.
///
/// Throws std::invalid_argument for n < 5 and CapacityError if the CSR
/// arrays would exceed `budget_bytes`.
CsrMatrix generate_poisson125(std::size_t grid_side,
                              std::uint64_t budget_bytes = kDefaultPoissonBudgetBytes);

}  // namespace hybridcg
