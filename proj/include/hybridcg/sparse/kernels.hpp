#pragma once

#include <cstddef>
#include <span>

#include "hybridcg/sparse/csr_matrix.hpp"

namespace hybridcg {

/// y = A x. Each row is accumulated in CSR element order.
Vector spmv(const CsrMatrix& a, std::span<const double> x);
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

/// y[i] = (A x)[i] for rows in [first, last); y is indexed like the full result.
void spmv_rows(const CsrMatrix& a, std::span<const double> x, std::span<double> y,
               std::size_t first, std::size_t last);

/// Sequential left-to-right inner product.
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);

/// out = x + scale * y
void axpy_into(std::span<const double> x, double scale, std::span<const double> y,
               std::span<double> out);

/// Mutable views of the ten pipelined-CG vectors over a common index range.
/// `p` and `x` may be left empty by callers that do not track the iterate
/// (the hybrid host replica); kernels then skip them.
struct PipecgSpans {
    std::span<double> x, r, u, w;
    std::span<const double> m, n;
    std::span<double> z, q, s, p;

    std::size_t size() const noexcept { return r.size(); }
    PipecgSpans subrange(std::size_t offset, std::size_t count) const;
};

/// Pipelined-CG vector updates in one pass per element:
///   z = n + beta z;  q = m + beta q;  s = w + beta s;  p = u + beta p;
///   x = x + alpha p; r = r - alpha s; u = u - alpha q;  w = w - alpha z.
void fused_pipecg_update(const PipecgSpans& v, double alpha, double beta);

/// The updates that do not read n: q, s, p, x, r, u (p and x skipped when empty).
void pipecg_update_without_n(const PipecgSpans& v, double alpha, double beta);

/// The updates that need n: z = n + beta z; w = w - alpha z.
void pipecg_update_with_n(const PipecgSpans& v, double alpha, double beta);

}  // namespace hybridcg
