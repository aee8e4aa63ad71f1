#include "hybridcg/sparse/poisson.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "hybridcg/errors.hpp"

namespace hybridcg {
namespace {

constexpr std::size_t kMinGridSide = 5;
constexpr std::size_t kReach = 2;

void require_grid_side(std::size_t n) {
    if (n < kMinGridSide) {
        throw std::invalid_argument("Poisson grid side must be at least 5, got " + std::to_string(n));
    }
}

}  // namespace

StencilSize poisson125_size(std::size_t grid_side) {
    require_grid_side(grid_side);
    const std::uint64_t n = grid_side;
    // per axis: n self pairs + 2(n-1) at distance 1 + 2(n-2) at distance 2
    const std::uint64_t per_axis = 5 * n - 6;
    return {n * n * n, per_axis * per_axis * per_axis};
}

CsrMatrix generate_poisson125(std::size_t grid_side, std::uint64_t budget_bytes) {
    const auto size = poisson125_size(grid_side);
    const std::uint64_t bytes = size.nnz * (sizeof(double) + sizeof(std::size_t)) +
                                (size.n_rows + 1) * sizeof(std::size_t);
    if (bytes > budget_bytes) {
        throw CapacityError("Poisson matrix needs " + std::to_string(bytes) +
                            " bytes, budget is " + std::to_string(budget_bytes));
    }

    const std::size_t n = grid_side;
    const std::size_t n_rows = static_cast<std::size_t>(size.n_rows);
    std::vector<std::size_t> offsets(n_rows + 1);
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    cols.reserve(static_cast<std::size_t>(size.nnz));
    vals.reserve(static_cast<std::size_t>(size.nnz));

    auto lo = [](std::size_t i) { return i >= kReach ? i - kReach : 0; };
    auto hi = [n](std::size_t i) { return std::min(i + kReach, n - 1); };

    std::size_t row = 0;
    for (std::size_t iz = 0; iz < n; ++iz) {
        for (std::size_t iy = 0; iy < n; ++iy) {
            for (std::size_t ix = 0; ix < n; ++ix, ++row) {
                offsets[row] = cols.size();
                std::size_t diag_pos = 0;
                // z-major loops emit columns in increasing linear order
                for (std::size_t jz = lo(iz); jz <= hi(iz); ++jz) {
                    for (std::size_t jy = lo(iy); jy <= hi(iy); ++jy) {
                        for (std::size_t jx = lo(ix); jx <= hi(ix); ++jx) {
                            const std::size_t col = jx + n * (jy + n * jz);
                            if (col == row) {
                                diag_pos = cols.size();
                            }
                            cols.push_back(col);
                            vals.push_back(-1.0);
                        }
                    }
                }
                const auto row_nnz = cols.size() - offsets[row];
                vals[diag_pos] = static_cast<double>(row_nnz - 1) + 1.0;
            }
        }
    }
    offsets[n_rows] = cols.size();
    return CsrMatrix(n_rows, n_rows, std::move(offsets), std::move(cols), std::move(vals));
}

}  // namespace hybridcg
