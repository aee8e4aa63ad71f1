#pragma once

#include <functional>
#include <span>

#include "hybridcg/solvers/types.hpp"
#include "hybridcg/sparse/jacobi.hpp"

namespace hybridcg {

/// Classic preconditioned conjugate gradient. The matrix must be SPD (not
/// checked). Stops when sqrt((u,u)) < tolerance or at max_iterations; throws
/// BreakdownError when (s,p) <= 0 or a scalar turns non-finite.
SolveResult pcg_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                      const JacobiPreconditioner& pc, const SolverConfig& cfg);

struct PipecgScalars {
    double alpha;
    double beta;
};

/// Step-length and direction scalars of the pipelined recurrence:
/// iteration 0 gives beta = 0, alpha = gamma/delta; later iterations give
/// beta = gamma/gamma_prev and alpha = gamma / (delta - beta*gamma/alpha_prev).
/// Throws BreakdownError on a zero or non-finite denominator.
PipecgScalars pipecg_scalars(double gamma, double gamma_prev, double delta, double alpha_prev,
                             std::size_t iteration);

/// r = b - A x0, u = M^-1 r, w = A u, m = M^-1 w, n = A m; gamma, delta and
/// norm from those; z, q, s, p zeroed.
PipecgState pipecg_init(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                        const JacobiPreconditioner& pc);

/// Called after each completed pipelined iteration with the current state.
using PipecgObserver = std::function<void(const PipecgState&)>;

/// Pipelined PCG. Same stopping rule and breakdown behaviour as pcg_solve.
SolveResult pipecg_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                         const JacobiPreconditioner& pc, const SolverConfig& cfg,
                         const PipecgObserver& observer = {});

/// ||b - A x||_2
double true_residual_norm(const CsrMatrix& a, std::span<const double> x, std::span<const double> b);

/// ||(b - A x) - r||_2 / ||b||_2, the gap between true and recurred residual.
double residual_gap(const CsrMatrix& a, std::span<const double> x, std::span<const double> b,
                    std::span<const double> r);

/// max_i |x_i - y_i|
double max_abs_diff(std::span<const double> x, std::span<const double> y);

/// Throws BreakdownError if the curvature delta is not positive and finite.
void check_curvature(double delta, std::size_t iteration);

}  // namespace hybridcg
