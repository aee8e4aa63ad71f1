#pragma once

#include <span>

#include "hybridcg/sparse/csr_matrix.hpp"

namespace hybridcg {

/// Diagonal (Jacobi) preconditioner holding 1/A[i,i].
class JacobiPreconditioner {
public:
    JacobiPreconditioner() = default;
    explicit JacobiPreconditioner(Vector inv_diag);

    std::span<const double> inv_diag() const noexcept { return inv_diag_; }
    std::size_t size() const noexcept { return inv_diag_.size(); }

    /// Preconditioner restricted to entries [offset, offset+count).
    JacobiPreconditioner slice(std::size_t offset, std::size_t count) const;

private:
    Vector inv_diag_;
};

/// Throws SetupError naming the first row whose diagonal is missing or zero.
JacobiPreconditioner jacobi_setup(const CsrMatrix& a);

/// out[i] = inv_diag[i] * r[i]
void jacobi_apply(const JacobiPreconditioner& pc, std::span<const double> r, std::span<double> out);
Vector jacobi_apply(const JacobiPreconditioner& pc, std::span<const double> r);

}  // namespace hybridcg
