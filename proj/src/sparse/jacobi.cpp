#include "hybridcg/sparse/jacobi.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hybridcg/errors.hpp"

namespace hybridcg {

JacobiPreconditioner::JacobiPreconditioner(Vector inv_diag) : inv_diag_(std::move(inv_diag)) {
    for (std::size_t i = 0; i < inv_diag_.size(); ++i) {
        if (!std::isfinite(inv_diag_[i]) || inv_diag_[i] == 0.0) {
            throw SetupError(i, "inverse diagonal must be finite and nonzero");
        }
    }
}

JacobiPreconditioner JacobiPreconditioner::slice(std::size_t offset, std::size_t count) const {
    if (offset + count > inv_diag_.size()) {
        throw std::out_of_range("preconditioner slice exceeds size");
    }
    const auto first = inv_diag_.begin() + static_cast<std::ptrdiff_t>(offset);
    return JacobiPreconditioner(Vector(first, first + static_cast<std::ptrdiff_t>(count)));
}

JacobiPreconditioner jacobi_setup(const CsrMatrix& a) {
    if (a.n_rows() != a.n_cols()) {
        throw DimensionMismatch("Jacobi preconditioner needs a square matrix");
    }
    Vector inv(a.n_rows());
    for (std::size_t i = 0; i < a.n_rows(); ++i) {
        if (!a.contains(i, i)) {
            throw SetupError(i, "diagonal entry missing");
        }
        const double d = a.at(i, i);
        if (d == 0.0 || !std::isfinite(d)) {
            throw SetupError(i, "diagonal entry is zero or non-finite");
        }
        inv[i] = 1.0 / d;
    }
    return JacobiPreconditioner(std::move(inv));
}

void jacobi_apply(const JacobiPreconditioner& pc, std::span<const double> r, std::span<double> out) {
    const auto inv = pc.inv_diag();
    if (r.size() != inv.size() || out.size() != inv.size()) {
        throw DimensionMismatch("jacobi_apply: preconditioner has " + std::to_string(inv.size()) +
                                " entries, vector has " + std::to_string(r.size()));
    }
    for (std::size_t i = 0; i < inv.size(); ++i) {
        out[i] = inv[i] * r[i];
    }
}

Vector jacobi_apply(const JacobiPreconditioner& pc, std::span<const double> r) {
    Vector out(r.size());
    jacobi_apply(pc, r, out);
    return out;
}

}  // namespace hybridcg
