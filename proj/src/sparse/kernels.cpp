#include "hybridcg/sparse/kernels.hpp"

#include <cmath>
#include <string>

#include "hybridcg/errors.hpp"

namespace hybridcg {
namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionMismatch(std::string(what) + ": lengths " + std::to_string(a) + " and " +
                                std::to_string(b));
    }
}

void require_spans(const PipecgSpans& v, bool need_iterate) {
    const auto len = v.r.size();
    for (auto s : {v.u.size(), v.w.size(), v.m.size(), v.n.size(), v.z.size(), v.q.size(),
                   v.s.size()}) {
        require_same(s, len, "pipecg update");
    }
    if (need_iterate || !v.p.empty() || !v.x.empty()) {
        require_same(v.p.size(), len, "pipecg update");
        require_same(v.x.size(), len, "pipecg update");
    }
}

}  // namespace

Vector spmv(const CsrMatrix& a, std::span<const double> x) {
    Vector y(a.n_rows());
    spmv(a, x, y);
    return y;
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    require_same(x.size(), a.n_cols(), "spmv input");
    require_same(y.size(), a.n_rows(), "spmv output");
    spmv_rows(a, x, y, 0, a.n_rows());
}

void spmv_rows(const CsrMatrix& a, std::span<const double> x, std::span<double> y,
               std::size_t first, std::size_t last) {
    require_same(x.size(), a.n_cols(), "spmv input");
    require_same(y.size(), a.n_rows(), "spmv output");
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (std::size_t i = first; i < last; ++i) {
        double sum = 0.0;
        for (auto k = offsets[i]; k < offsets[i + 1]; ++k) {
            sum += vals[k] * x[cols[k]];
        }
        y[i] = sum;
    }
}

double dot(std::span<const double> x, std::span<const double> y) {
    require_same(x.size(), y.size(), "dot");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += x[i] * y[i];
    }
    return sum;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void axpy_into(std::span<const double> x, double scale, std::span<const double> y,
               std::span<double> out) {
    require_same(x.size(), y.size(), "axpy");
    require_same(x.size(), out.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] + scale * y[i];
    }
}

PipecgSpans PipecgSpans::subrange(std::size_t offset, std::size_t count) const {
    auto cut = [&](auto s) { return s.empty() ? s : s.subspan(offset, count); };
    return {cut(x), cut(r), cut(u), cut(w), cut(m), cut(n), cut(z), cut(q), cut(s), cut(p)};
}

void fused_pipecg_update(const PipecgSpans& v, double alpha, double beta) {
    require_spans(v, true);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double zi = v.n[i] + beta * v.z[i];
        const double qi = v.m[i] + beta * v.q[i];
        const double si = v.w[i] + beta * v.s[i];
        const double pi = v.u[i] + beta * v.p[i];
        v.z[i] = zi;
        v.q[i] = qi;
        v.s[i] = si;
        v.p[i] = pi;
        v.x[i] += alpha * pi;
        v.r[i] -= alpha * si;
        v.u[i] -= alpha * qi;
        v.w[i] -= alpha * zi;
    }
}

void pipecg_update_without_n(const PipecgSpans& v, double alpha, double beta) {
    require_spans(v, false);
    const bool track_iterate = !v.x.empty();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double qi = v.m[i] + beta * v.q[i];
        const double si = v.w[i] + beta * v.s[i];
        v.q[i] = qi;
        v.s[i] = si;
        if (track_iterate) {
            const double pi = v.u[i] + beta * v.p[i];
            v.p[i] = pi;
            v.x[i] += alpha * pi;
        }
        v.r[i] -= alpha * si;
        v.u[i] -= alpha * qi;
    }
}

void pipecg_update_with_n(const PipecgSpans& v, double alpha, double beta) {
    require_same(v.n.size(), v.z.size(), "pipecg update");
    require_same(v.w.size(), v.z.size(), "pipecg update");
    for (std::size_t i = 0; i < v.z.size(); ++i) {
        const double zi = v.n[i] + beta * v.z[i];
        v.z[i] = zi;
        v.w[i] -= alpha * zi;
    }
}

}  // namespace hybridcg
