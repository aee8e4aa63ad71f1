#include "hybridcg/solvers/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "hybridcg/errors.hpp"

namespace hybridcg {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_system(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                    const JacobiPreconditioner& pc) {
    if (a.n_rows() != a.n_cols()) {
        throw DimensionMismatch("solver matrix must be square");
    }
    if (b.size() != a.n_rows() || x0.size() != a.n_rows() || pc.size() != a.n_rows()) {
        throw DimensionMismatch("right-hand side, initial guess and preconditioner must match N");
    }
}

void check_finite(double value, const char* name, std::size_t iteration) {
    if (!std::isfinite(value)) {
        throw BreakdownError(iteration, std::string(name) + " is not finite");
    }
}

}  // namespace

void SolverConfig::validate() const {
    if (!(tolerance > 0.0)) {
        throw std::invalid_argument("tolerance must be positive");
    }
    if (max_iterations < 1) {
        throw std::invalid_argument("max_iterations must be at least 1");
    }
}

void check_curvature(double delta, std::size_t iteration) {
    if (!std::isfinite(delta) || delta <= 0.0) {
        throw BreakdownError(iteration, "non-positive or non-finite curvature " + std::to_string(delta));
    }
}

SolveResult pcg_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                      const JacobiPreconditioner& pc, const SolverConfig& cfg) {
    cfg.validate();
    require_system(a, b, x0, pc);
    const auto n = a.n_rows();
    const auto setup_start = Clock::now();

    SolveResult result;
    auto& report = result.report;
    report.strategy = "pcg";
    Vector& x = result.x;
    x.assign(x0.begin(), x0.end());
    Vector r(n), u(n), p(n, 0.0), s(n);
    spmv(a, x, s);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = b[i] - s[i];
    }
    jacobi_apply(pc, r, u);
    double gamma = dot(u, r);
    double gamma_prev = 0.0;
    double norm = norm2(u);
    report.phase_times["setup"] = seconds_since(setup_start);
    if (cfg.record_history) {
        report.history.push_back(norm);
    }

    const auto loop_start = Clock::now();
    std::size_t it = 0;
    for (;;) {
        check_finite(norm, "residual norm", it);
        if (norm < cfg.tolerance) {
            report.converged = true;
            break;
        }
        if (it == cfg.max_iterations) {
            break;
        }
        const double beta = it > 0 ? gamma / gamma_prev : 0.0;
        check_finite(beta, "beta", it);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = u[i] + beta * p[i];
        }
        spmv(a, p, s);
        const double delta = dot(s, p);
        check_curvature(delta, it);
        const double alpha = gamma / delta;
        check_finite(alpha, "alpha", it);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * s[i];
        }
        jacobi_apply(pc, r, u);
        gamma_prev = gamma;
        gamma = dot(u, r);
        norm = norm2(u);
        ++it;
        if (cfg.record_history) {
            report.history.push_back(norm);
        }
    }
    report.phase_times["iterate"] = seconds_since(loop_start);
    report.iterations = it;
    report.final_norm = norm;
    return result;
}

PipecgScalars pipecg_scalars(double gamma, double gamma_prev, double delta, double alpha_prev,
                             std::size_t iteration) {
    if (iteration == 0) {
        if (delta == 0.0 || !std::isfinite(delta)) {
            throw BreakdownError(iteration, "zero or non-finite delta");
        }
        const double alpha = gamma / delta;
        check_finite(alpha, "alpha", iteration);
        return {alpha, 0.0};
    }
    if (gamma_prev == 0.0 || !std::isfinite(gamma_prev)) {
        throw BreakdownError(iteration, "zero or non-finite previous gamma");
    }
    if (alpha_prev == 0.0 || !std::isfinite(alpha_prev)) {
        throw BreakdownError(iteration, "zero or non-finite previous alpha");
    }
    const double beta = gamma / gamma_prev;
    check_finite(beta, "beta", iteration);
    const double denom = delta - beta * gamma / alpha_prev;
    if (denom == 0.0 || !std::isfinite(denom)) {
        throw BreakdownError(iteration, "zero or non-finite alpha denominator");
    }
    const double alpha = gamma / denom;
    check_finite(alpha, "alpha", iteration);
    return {alpha, beta};
}

PipecgState pipecg_init(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                        const JacobiPreconditioner& pc) {
    require_system(a, b, x0, pc);
    const auto n = a.n_rows();
    PipecgState st;
    st.x.assign(x0.begin(), x0.end());
    st.r.resize(n);
    spmv(a, st.x, st.r);
    for (std::size_t i = 0; i < n; ++i) {
        st.r[i] = b[i] - st.r[i];
    }
    st.u = jacobi_apply(pc, st.r);
    st.w = spmv(a, st.u);
    st.m = jacobi_apply(pc, st.w);
    st.n = spmv(a, st.m);
    st.z.assign(n, 0.0);
    st.q.assign(n, 0.0);
    st.s.assign(n, 0.0);
    st.p.assign(n, 0.0);
    st.gamma = dot(st.r, st.u);
    st.delta = dot(st.w, st.u);
    st.norm = norm2(st.u);
    return st;
}

SolveResult pipecg_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                         const JacobiPreconditioner& pc, const SolverConfig& cfg,
                         const PipecgObserver& observer) {
    cfg.validate();
    const auto setup_start = Clock::now();
    PipecgState st = pipecg_init(a, b, x0, pc);

    SolveResult result;
    auto& report = result.report;
    report.strategy = "pipecg";
    report.phase_times["setup"] = seconds_since(setup_start);
    if (cfg.record_history) {
        report.history.push_back(st.norm);
    }
    const auto loop_start = Clock::now();
    for (;;) {
        check_finite(st.norm, "residual norm", st.iteration);
        if (st.norm < cfg.tolerance) {
            report.converged = true;
            break;
        }
        if (st.iteration == cfg.max_iterations) {
            break;
        }
        check_curvature(st.delta, st.iteration);
        const auto sc = pipecg_scalars(st.gamma, st.gamma_prev, st.delta, st.alpha_prev, st.iteration);
        st.alpha = sc.alpha;
        st.beta = sc.beta;
        fused_pipecg_update(st.spans(), st.alpha, st.beta);
        st.gamma_prev = st.gamma;
        st.gamma = dot(st.r, st.u);
        st.delta = dot(st.w, st.u);
        st.norm = norm2(st.u);
        jacobi_apply(pc, st.w, st.m);
        spmv(a, st.m, st.n);
        st.alpha_prev = st.alpha;
        ++st.iteration;

        if (cfg.record_history) {
            report.history.push_back(st.norm);
        }
        if (cfg.drift_check_interval > 0 && st.iteration % cfg.drift_check_interval == 0) {
            report.drift.push_back({st.iteration, residual_gap(a, st.x, b, st.r)});
        }
        if (observer) {
            observer(st);
        }
    }
    report.phase_times["iterate"] = seconds_since(loop_start);
    report.iterations = st.iteration;
    report.final_norm = st.norm;
    result.x = std::move(st.x);
    return result;
}

double true_residual_norm(const CsrMatrix& a, std::span<const double> x, std::span<const double> b) {
    if (b.size() != a.n_rows()) {
        throw DimensionMismatch("true_residual_norm: b does not match matrix rows");
    }
    Vector ax = spmv(a, x);
    for (std::size_t i = 0; i < ax.size(); ++i) {
        ax[i] = b[i] - ax[i];
    }
    return norm2(ax);
}

double residual_gap(const CsrMatrix& a, std::span<const double> x, std::span<const double> b,
                    std::span<const double> r) {
    if (r.size() != a.n_rows() || b.size() != a.n_rows()) {
        throw DimensionMismatch("residual_gap: vector lengths do not match matrix rows");
    }
    Vector gap = spmv(a, x);
    for (std::size_t i = 0; i < gap.size(); ++i) {
        gap[i] = (b[i] - gap[i]) - r[i];
    }
    const double b_norm = norm2(b);
    return b_norm > 0.0 ? norm2(gap) / b_norm : norm2(gap);
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DimensionMismatch("max_abs_diff: lengths differ");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        worst = std::max(worst, std::abs(x[i] - y[i]));
    }
    return worst;
}

}  // namespace hybridcg
