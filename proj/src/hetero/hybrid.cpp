#include "hybridcg/hetero/hybrid.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <string>

#include "hybridcg/errors.hpp"
#include "hybridcg/solvers/solvers.hpp"
#include "hybridcg/sparse/kernels.hpp"

namespace hybridcg {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double to_seconds(std::chrono::nanoseconds ns) { return std::chrono::duration<double>(ns).count(); }

void require_system(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                    const JacobiPreconditioner& pc) {
    if (a.n_rows() != a.n_cols()) {
        throw DimensionMismatch("solver matrix must be square");
    }
    if (b.size() != a.n_rows() || x0.size() != a.n_rows() || pc.size() != a.n_rows()) {
        throw DimensionMismatch("right-hand side, initial guess and preconditioner must match N");
    }
}

void require_finite_norm(double norm, std::size_t iteration) {
    if (!std::isfinite(norm)) {
        throw BreakdownError(iteration, "residual norm is not finite");
    }
}

// Waits for both futures before surfacing either exception, so no task can
// outlive the locals it captured by reference.
template <typename A, typename B>
std::pair<A, B> join(std::future<A>& fa, std::future<B>& fb) {
    fa.wait();
    fb.wait();
    A ra = fa.get();
    B rb = fb.get();
    return {std::move(ra), std::move(rb)};
}

void join_void(std::future<void>& fa, std::future<void>& fb) {
    fa.wait();
    fb.wait();
    fa.get();
    fb.get();
}

// Device-side kernels: each call is one throttled kernel on the device's workers.

void dev_spmv(Device& d, const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    if (x.size() != a.n_cols() || y.size() != a.n_rows()) {
        throw DimensionMismatch("device spmv operands do not match the matrix");
    }
    d.run_kernel([&] {
        d.parallel_for(a.n_rows(), [&](std::size_t f, std::size_t l) { spmv_rows(a, x, y, f, l); });
    });
}

void dev_jacobi(Device& d, std::span<const double> inv_diag, std::span<const double> in,
                std::span<double> out) {
    if (in.size() != inv_diag.size() || out.size() != inv_diag.size()) {
        throw DimensionMismatch("device preconditioner operands differ in length");
    }
    d.run_kernel([&] {
        d.parallel_for(in.size(), [&](std::size_t f, std::size_t l) {
            for (auto i = f; i < l; ++i) {
                out[i] = inv_diag[i] * in[i];
            }
        });
    });
}

void dev_fused(Device& d, const PipecgSpans& v, double alpha, double beta) {
    d.run_kernel([&] {
        d.parallel_for(v.size(), [&](std::size_t f, std::size_t l) {
            fused_pipecg_update(v.subrange(f, l - f), alpha, beta);
        });
    });
}

void dev_update_without_n(Device& d, const PipecgSpans& v, double alpha, double beta) {
    d.run_kernel([&] {
        d.parallel_for(v.size(), [&](std::size_t f, std::size_t l) {
            pipecg_update_without_n(v.subrange(f, l - f), alpha, beta);
        });
    });
}

void dev_update_with_n(Device& d, const PipecgSpans& v, double alpha, double beta) {
    d.run_kernel([&] {
        d.parallel_for(v.size(), [&](std::size_t f, std::size_t l) {
            pipecg_update_with_n(v.subrange(f, l - f), alpha, beta);
        });
    });
}

double dev_dot(Device& d, std::span<const double> x, std::span<const double> y) {
    return d.run_kernel([&] { return dot(x, y); });
}

void dev_residual(Device& d, const CsrMatrix& a, std::span<const double> b,
                  std::span<const double> x, std::span<double> r) {
    dev_spmv(d, a, x, r);
    d.run_kernel([&] {
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] = b[i] - r[i];
        }
    });
}

PipecgSpans store_spans(DeviceStore& st, bool with_iterate) {
    PipecgSpans v;
    if (with_iterate) {
        v.x = st.at("x");
        v.p = st.at("p");
    }
    v.r = st.at("r");
    v.u = st.at("u");
    v.w = st.at("w");
    v.m = st.at("m");
    v.n = st.at("n");
    v.z = st.at("z");
    v.q = st.at("q");
    v.s = st.at("s");
    return v;
}

struct DotTriple {
    double gamma;
    double delta;
    double norm;
};

// Full pipelined initialization on one device's store; returns gamma, delta, norm.
DotTriple init_full_state(Device& d, const CsrMatrix& a, std::span<const double> b,
                          std::span<const double> x0, const JacobiPreconditioner& pc,
                          bool with_iterate, bool compute_n) {
    const auto n = a.n_rows();
    auto& st = d.store();
    st.clear();
    auto& r = st.put("r", Vector(n));
    if (with_iterate) {
        auto& x = st.put("x", Vector(x0.begin(), x0.end()));
        st.put("p", Vector(n, 0.0));
        dev_residual(d, a, b, x, r);
    } else {
        Vector x(x0.begin(), x0.end());
        dev_residual(d, a, b, x, r);
    }
    auto& u = st.put("u", Vector(n));
    dev_jacobi(d, pc.inv_diag(), r, u);
    auto& w = st.put("w", Vector(n));
    dev_spmv(d, a, u, w);
    auto& m = st.put("m", Vector(n));
    dev_jacobi(d, pc.inv_diag(), w, m);
    auto& nv = st.put("n", Vector(n, 0.0));
    if (compute_n) {
        dev_spmv(d, a, m, nv);
    }
    st.put("z", Vector(n, 0.0));
    st.put("q", Vector(n, 0.0));
    st.put("s", Vector(n, 0.0));
    return {dev_dot(d, r, u), dev_dot(d, w, u), std::sqrt(dev_dot(d, u, u))};
}

struct ChannelMark {
    std::size_t values;
    std::size_t copies;
};

ChannelMark mark(const TransferChannel& c) { return {c.values_moved(), c.copies_issued()}; }

// Fulfils `handoff` with the outgoing copy, or with its failure.
template <typename F>
void hand_off(std::promise<CopyHandle>& handoff, F&& issue) {
    try {
        handoff.set_value(std::forward<F>(issue)());
    } catch (...) {
        handoff.set_exception(std::current_exception());
        throw;
    }
}

// Task-parallel hybrids share the outer loop; `iterate` runs one iteration
// given (alpha, beta) and returns the new gamma, delta and norm.
template <typename Iterate>
void run_task_parallel_loop(const SolverConfig& cfg, DevicePair& devices, DotTriple start,
                            SolveReport& report, Iterate&& iterate, const HybridObserver& observer) {
    double gamma = start.gamma;
    double gamma_prev = 0.0;
    double delta = start.delta;
    double norm = start.norm;
    double alpha_prev = 0.0;
    std::size_t it = 0;
    if (cfg.record_history) {
        report.history.push_back(norm);
    }
    for (;;) {
        require_finite_norm(norm, it);
        if (norm < cfg.tolerance) {
            report.converged = true;
            break;
        }
        if (it == cfg.max_iterations) {
            break;
        }
        const auto sc = devices.host
                            .submit([&] {
                                check_curvature(delta, it);
                                return pipecg_scalars(gamma, gamma_prev, delta, alpha_prev, it);
                            })
                            .get();
        const DotTriple next = iterate(sc.alpha, sc.beta);
        gamma_prev = gamma;
        gamma = next.gamma;
        delta = next.delta;
        norm = next.norm;
        alpha_prev = sc.alpha;
        ++it;
        if (cfg.record_history) {
            report.history.push_back(norm);
        }
        if (observer) {
            observer(it, devices.host, devices.accel);
        }
    }
    report.iterations = it;
    report.final_norm = norm;
}

// An untouched iterate equals x0, which the host already has.
Vector fetch_solution(DevicePair& devices, TransferChannel& channel, std::span<const double> x0,
                      std::size_t iterations) {
    if (iterations == 0) {
        return Vector(x0.begin(), x0.end());
    }
    auto& host = devices.host;
    auto& accel = devices.accel;
    std::promise<CopyHandle> final_copy;
    auto final_handle = final_copy.get_future();
    auto send = accel.submit([&] {
        hand_off(final_copy, [&] { return channel.copy_async(accel, host, {{"x"}}); });
    });
    auto receive = host.submit([&] {
        channel.wait(final_handle.get());
        return host.store().at("x");
    });
    send.wait();
    receive.wait();
    send.get();
    return receive.get();
}

}  // namespace

HybridResult hybrid1_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                           const JacobiPreconditioner& pc, const SolverConfig& cfg,
                           DevicePair& devices, TransferChannel& channel,
                           const HybridObserver& observer) {
    cfg.validate();
    require_system(a, b, x0, pc);
    auto& host = devices.host;
    auto& accel = devices.accel;
    const auto n = a.n_rows();

    HybridResult result;
    auto& report = result.report;
    report.strategy = "hybrid1";
    const auto setup_mark = mark(channel);
    const auto setup_start = Clock::now();

    const DotTriple start =
        accel.submit([&] { return init_full_state(accel, a, b, x0, pc, true, true); }).get();
    host.submit([&] {
            auto& st = host.store();
            st.clear();
            st.put("w", Vector(n, 0.0));
            st.put("r", Vector(n, 0.0));
            st.put("u", Vector(n, 0.0));
        })
        .get();
    report.phase_times["setup"] = seconds_since(setup_start);
    host.reset_busy();
    accel.reset_busy();

    std::chrono::nanoseconds host_wait{0};
    const auto loop_mark = mark(channel);
    const auto loop_start = Clock::now();
    run_task_parallel_loop(cfg, devices, start, report, [&](double alpha, double beta) {
        std::promise<CopyHandle> handoff;
        auto incoming = handoff.get_future();
        auto accel_done = accel.submit([&] {
            auto& st = accel.store();
            hand_off(handoff, [&] {
                dev_fused(accel, store_spans(st, true), alpha, beta);
                return channel.copy_async(accel, host, {{"w"}, {"r"}, {"u"}});
            });
            dev_jacobi(accel, pc.inv_diag(), st.at("w"), st.at("m"));
            dev_spmv(accel, a, st.at("m"), st.at("n"));
        });
        auto host_done = host.submit([&] {
            host_wait += channel.wait(incoming.get());
            auto& st = host.store();
            const auto& r = st.at("r");
            const auto& u = st.at("u");
            const auto& w = st.at("w");
            return DotTriple{dev_dot(host, r, u), dev_dot(host, w, u), std::sqrt(dev_dot(host, u, u))};
        });
        accel_done.wait();
        host_done.wait();
        accel_done.get();
        return host_done.get();
    }, observer);
    report.phase_times["iterate"] = seconds_since(loop_start);
    report.phase_times["host_busy"] = host.busy_seconds();
    report.phase_times["accel_busy"] = accel.busy_seconds();
    report.phase_times["host_wait"] = to_seconds(host_wait);
    const auto end_mark = mark(channel);

    result.x = fetch_solution(devices, channel, x0, report.iterations);

    result.transfers.iteration_values = end_mark.values - loop_mark.values;
    result.transfers.iteration_copies = end_mark.copies - loop_mark.copies;
    result.transfers.setup_values =
        channel.values_moved() - setup_mark.values - result.transfers.iteration_values;
    result.transfers.setup_copies =
        channel.copies_issued() - setup_mark.copies - result.transfers.iteration_copies;
    return result;
}

HybridResult hybrid2_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                           const JacobiPreconditioner& pc, const SolverConfig& cfg,
                           DevicePair& devices, TransferChannel& channel,
                           const HybridObserver& observer) {
    cfg.validate();
    require_system(a, b, x0, pc);
    auto& host = devices.host;
    auto& accel = devices.accel;

    HybridResult result;
    auto& report = result.report;
    report.strategy = "hybrid2";
    const auto setup_mark = mark(channel);
    const auto setup_start = Clock::now();

    // The host builds its own replicas; it never needs n at setup.
    auto accel_init =
        accel.submit([&] { return init_full_state(accel, a, b, x0, pc, true, true); });
    auto host_init = host.submit([&] { return init_full_state(host, a, b, x0, pc, false, false); });
    const DotTriple start = join(accel_init, host_init).second;
    report.phase_times["setup"] = seconds_since(setup_start);
    host.reset_busy();
    accel.reset_busy();

    std::chrono::nanoseconds host_wait{0};
    const auto loop_mark = mark(channel);
    const auto loop_start = Clock::now();
    run_task_parallel_loop(cfg, devices, start, report, [&](double alpha, double beta) {
        std::promise<CopyHandle> handoff;
        auto incoming = handoff.get_future();
        auto accel_done = accel.submit([&] {
            auto& st = accel.store();
            hand_off(handoff, [&] { return channel.copy_async(accel, host, {{"n"}}); });
            dev_fused(accel, store_spans(st, true), alpha, beta);
            dev_jacobi(accel, pc.inv_diag(), st.at("w"), st.at("m"));
            dev_spmv(accel, a, st.at("m"), st.at("n"));
        });
        auto host_done = host.submit([&] {
            auto& st = host.store();
            const auto v = store_spans(st, false);
            dev_update_without_n(host, v, alpha, beta);
            DotTriple out{};
            out.gamma = dev_dot(host, v.r, v.u);
            out.norm = std::sqrt(dev_dot(host, v.u, v.u));
            host_wait += channel.wait(incoming.get());
            dev_update_with_n(host, v, alpha, beta);
            dev_jacobi(host, pc.inv_diag(), v.w, st.at("m"));
            out.delta = dev_dot(host, v.w, v.u);
            return out;
        });
        accel_done.wait();
        host_done.wait();
        accel_done.get();
        return host_done.get();
    }, observer);
    report.phase_times["iterate"] = seconds_since(loop_start);
    report.phase_times["host_busy"] = host.busy_seconds();
    report.phase_times["accel_busy"] = accel.busy_seconds();
    report.phase_times["host_wait"] = to_seconds(host_wait);
    const auto end_mark = mark(channel);

    result.x = fetch_solution(devices, channel, x0, report.iterations);

    result.transfers.iteration_values = end_mark.values - loop_mark.values;
    result.transfers.iteration_copies = end_mark.copies - loop_mark.copies;
    result.transfers.setup_values =
        channel.values_moved() - setup_mark.values - result.transfers.iteration_values;
    result.transfers.setup_copies =
        channel.copies_issued() - setup_mark.copies - result.transfers.iteration_copies;
    return result;
}

namespace {

// One device's share of the data-parallel hybrid.
struct Slice {
    Device* device = nullptr;
    const RowRangeView* view = nullptr;
    TransferChannel* outgoing = nullptr;
    TransferChannel* incoming = nullptr;
    std::size_t first = 0;
    std::size_t count = 0;
    JacobiPreconditioner pc;
    PhasedSegment n;
    bool needs_remote = false;  // this device has phase-2 entries
    std::chrono::nanoseconds waited{0};

    PipecgSpans spans() {
        auto& st = device->store();
        PipecgSpans v;
        v.x = st.at("x");
        v.r = st.at("r");
        v.u = st.at("u");
        v.w = st.at("w");
        v.m = std::span<const double>(st.at("m")).subspan(first, count);
        v.n = n.values();
        v.z = st.at("z");
        v.q = st.at("q");
        v.s = st.at("s");
        v.p = st.at("p");
        return v;
    }

    std::span<double> m_local() { return std::span<double>(device->store().at("m")).subspan(first, count); }

    void spmv_both_phases(std::span<const double> x_full) {
        auto runner = device->range_runner();
        device->run_kernel([&] { spmv_phase(*view, SpmvPhase::Local, x_full, n, runner); });
        device->run_kernel([&] { spmv_phase(*view, SpmvPhase::Remote, x_full, n, runner); });
    }
};

struct Partials {
    double gamma = 0.0;
    double uu = 0.0;
};

}  // namespace

HybridResult hybrid3_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                           const JacobiPreconditioner& pc, const SolverConfig& cfg,
                           DevicePair& devices, ChannelPair& channels,
                           const Hybrid3Options& options, const HybridObserver& observer) {
    cfg.validate();
    require_system(a, b, x0, pc);
    auto& host = devices.host;
    auto& accel = devices.accel;
    const auto n = a.n_rows();

    HybridResult result;
    auto& report = result.report;

    const auto profile_start = Clock::now();
    DeviceProfile profile;
    if (options.pinned_r_host) {
        profile = DeviceProfile::pinned_ratio(*options.pinned_r_host, a.nnz());
    } else if (options.profile_rows > 0 && options.profile_rows < n) {
        profile = profile_devices(a.row_block(0, options.profile_rows), host, accel,
                                  options.profile_runs);
    } else {
        profile = profile_devices(a, host, accel, options.profile_runs);
    }
    report.phase_times["profile"] = seconds_since(profile_start);
    result.profile = profile;

    const auto decompose_start = Clock::now();
    const auto host_rows = decompose_1d(a, derive_split(profile, a.nnz()));
    const Partition partition = decompose_2d(a, host_rows);
    report.phase_times["decompose"] = seconds_since(decompose_start);
    result.partition = partition.summary();

    if (host_rows == 0 || host_rows == n) {
        Device& only = host_rows == 0 ? accel : host;
        only.reset_busy();
        auto single = only.submit([&] {
                              return only.run_kernel([&] { return pipecg_solve(a, b, x0, pc, cfg); });
                          })
                          .get();
        result.x = std::move(single.x);
        auto phases = std::move(report.phase_times);
        report = std::move(single.report);
        report.phase_times.merge(phases);
        report.phase_times[std::string(to_string(only.id())) + "_busy"] = only.busy_seconds();
        report.strategy = "hybrid3";
        return result;
    }

    report.strategy = "hybrid3";
    const auto setup_start = Clock::now();
    const auto setup_mark_h = mark(channels.to_host);
    const auto setup_mark_a = mark(channels.to_accel);

    Slice hs;
    hs.device = &host;
    hs.view = &partition.host_view;
    hs.outgoing = &channels.to_accel;
    hs.incoming = &channels.to_host;
    hs.first = 0;
    hs.count = partition.n_host_rows;
    hs.needs_remote = partition.nnz2_host > 0;
    Slice as;
    as.device = &accel;
    as.view = &partition.accel_view;
    as.outgoing = &channels.to_host;
    as.incoming = &channels.to_accel;
    as.first = partition.n_host_rows;
    as.count = partition.n_accel_rows;
    as.needs_remote = partition.nnz2_accel > 0;
    for (Slice* s : {&hs, &as}) {
        s->pc = pc.slice(s->first, s->count);
        s->n = PhasedSegment(s->count);
    }

    // Setup: each device takes its slices of b and x0; u is exchanged once so
    // that w = A u can be formed.
    std::promise<CopyHandle> u_to_accel, u_to_host;
    auto u_for_accel = u_to_accel.get_future();
    auto u_for_host = u_to_host.get_future();
    auto setup_one = [&](Slice& self, const Slice& peer, std::promise<CopyHandle>& out) {
        Device& d = *self.device;
        auto& st = d.store();
        st.clear();
        const auto first = b.begin() + static_cast<std::ptrdiff_t>(self.first);
        const auto x_first = x0.begin() + static_cast<std::ptrdiff_t>(self.first);
        const auto cnt = static_cast<std::ptrdiff_t>(self.count);
        const Vector b_local(first, first + cnt);
        st.put("x", Vector(x_first, x_first + cnt));
        auto& r = st.put("r", Vector(self.count));
        auto& u = st.put("u", Vector(self.count));
        st.put("w", Vector(self.count));
        st.put("z", Vector(self.count, 0.0));
        st.put("q", Vector(self.count, 0.0));
        st.put("s", Vector(self.count, 0.0));
        st.put("p", Vector(self.count, 0.0));
        st.put("m", Vector(n, 0.0));
        auto& u_full = st.put("u_full", Vector(n, 0.0));

        // r = b - A x0 over own rows; x0 is problem input available to both devices
        self.spmv_both_phases(x0);
        const auto ax = self.n.values();
        d.run_kernel([&] {
            for (std::size_t i = 0; i < self.count; ++i) {
                r[i] = b_local[i] - ax[i];
            }
        });
        dev_jacobi(d, self.pc.inv_diag(), r, u);
        std::copy(u.begin(), u.end(), u_full.begin() + static_cast<std::ptrdiff_t>(self.first));
        hand_off(out, [&] {
            if (!peer.needs_remote) {
                return CopyHandle{};
            }
            return self.outgoing->copy_async(d, *peer.device, {{"u_full", self.first, self.count}});
        });
    };
    auto setup_two = [&](Slice& self, std::future<CopyHandle>& in) {
        Device& d = *self.device;
        auto& st = d.store();
        auto handle = in.get();
        if (self.needs_remote) {
            self.waited += self.incoming->wait(handle);
        }
        self.spmv_both_phases(st.at("u_full"));
        auto& w = st.at("w");
        const auto nv = self.n.values();
        std::copy(nv.begin(), nv.end(), w.begin());
        dev_jacobi(d, self.pc.inv_diag(), w, self.m_local());
        const auto& r = st.at("r");
        const auto& u = st.at("u");
        return DotTriple{dev_dot(d, r, u), dev_dot(d, w, u), dev_dot(d, u, u)};
    };
    {
        auto guarded_setup = [&](Slice& self, const Slice& peer, std::promise<CopyHandle>& out) {
            try {
                setup_one(self, peer, out);
            } catch (...) {
                try {
                    out.set_exception(std::current_exception());
                } catch (const std::future_error&) {
                }
                throw;
            }
        };
        auto h1 = host.submit([&] { guarded_setup(hs, as, u_to_accel); });
        auto a1 = accel.submit([&] { guarded_setup(as, hs, u_to_host); });
        auto h2 = host.submit([&] { return setup_two(hs, u_for_host); });
        auto a2 = accel.submit([&] { return setup_two(as, u_for_accel); });
        h2.wait();
        a2.wait();
        join_void(h1, a1);
        auto [ph, pa] = join(h2, a2);
        ph.norm = ph.norm + pa.norm;
        ph.gamma = ph.gamma + pa.gamma;
        ph.delta = ph.delta + pa.delta;
        ph.norm = std::sqrt(ph.norm);
        report.phase_times["setup"] = seconds_since(setup_start);

        host.reset_busy();
        accel.reset_busy();
        hs.waited = as.waited = std::chrono::nanoseconds::zero();
        const auto loop_mark_h = mark(channels.to_host);
        const auto loop_mark_a = mark(channels.to_accel);
        const auto loop_start = Clock::now();

        double gamma = ph.gamma;
        double gamma_prev = 0.0;
        double delta = ph.delta;
        double norm = ph.norm;
        double alpha_prev = 0.0;
        std::size_t it = 0;
        if (cfg.record_history) {
            report.history.push_back(norm);
        }
        for (;;) {
            require_finite_norm(norm, it);
            if (norm < cfg.tolerance) {
                report.converged = true;
                break;
            }
            if (it == cfg.max_iterations) {
                break;
            }
            const auto sc = host.submit([&] {
                                    check_curvature(delta, it);
                                    return pipecg_scalars(gamma, gamma_prev, delta, alpha_prev, it);
                                })
                                .get();
            const double alpha = sc.alpha;
            const double beta = sc.beta;

            std::promise<CopyHandle> m_to_accel, m_to_host;
            auto m_for_accel = m_to_accel.get_future();
            auto m_for_host = m_to_host.get_future();

            // Before m arrives: start the outgoing copy, update everything that
            // does not need n, take the gamma and norm partials, then the
            // local-column half of n = A m.
            auto phase_one = [&](Slice& self, const Slice& peer, std::promise<CopyHandle>& out) {
                Device& d = *self.device;
                hand_off(out, [&] {
                    if (!peer.needs_remote) {
                        return CopyHandle{};
                    }
                    return self.outgoing->copy_async(d, *peer.device, {{"m", self.first, self.count}});
                });
                const auto v = self.spans();
                dev_update_without_n(d, v, alpha, beta);
                Partials part{dev_dot(d, v.r, v.u), dev_dot(d, v.u, v.u)};
                auto runner = d.range_runner();
                const auto& m_full = d.store().at("m");
                d.run_kernel([&] { spmv_phase(*self.view, SpmvPhase::Local, m_full, self.n, runner); });
                return part;
            };
            // After m arrives: finish n, then z, w, the new m slice and the delta partial.
            auto phase_two = [&](Slice& self, std::future<CopyHandle>& in) {
                Device& d = *self.device;
                auto handle = in.get();
                if (self.needs_remote) {
                    self.waited += self.incoming->wait(handle);
                }
                auto runner = d.range_runner();
                const auto& m_full = d.store().at("m");
                d.run_kernel([&] { spmv_phase(*self.view, SpmvPhase::Remote, m_full, self.n, runner); });
                const auto v = self.spans();
                dev_update_with_n(d, v, alpha, beta);
                dev_jacobi(d, self.pc.inv_diag(), v.w, self.m_local());
                return dev_dot(d, v.w, v.u);
            };

            auto h1 = host.submit([&] { return phase_one(hs, as, m_to_accel); });
            auto a1 = accel.submit([&] { return phase_one(as, hs, m_to_host); });
            auto h2 = host.submit([&] { return phase_two(hs, m_for_host); });
            auto a2 = accel.submit([&] { return phase_two(as, m_for_accel); });
            h1.wait();
            a1.wait();
            h2.wait();
            a2.wait();
            const auto [part_h, part_a] = join(h1, a1);
            const auto [delta_h, delta_a] = join(h2, a2);

            gamma_prev = gamma;
            gamma = part_h.gamma + part_a.gamma;
            norm = std::sqrt(part_h.uu + part_a.uu);
            delta = delta_h + delta_a;
            alpha_prev = alpha;
            ++it;
            if (cfg.record_history) {
                report.history.push_back(norm);
            }
            if (observer) {
                observer(it, host, accel);
            }
        }
        report.iterations = it;
        report.final_norm = norm;
        report.phase_times["iterate"] = seconds_since(loop_start);
        report.phase_times["host_busy"] = host.busy_seconds();
        report.phase_times["accel_busy"] = accel.busy_seconds();
        report.phase_times["host_wait"] = to_seconds(hs.waited);
        report.phase_times["accel_wait"] = to_seconds(as.waited);

        const auto end_h = mark(channels.to_host);
        const auto end_a = mark(channels.to_accel);
        result.transfers.iteration_values =
            (end_h.values - loop_mark_h.values) + (end_a.values - loop_mark_a.values);
        result.transfers.iteration_copies =
            (end_h.copies - loop_mark_h.copies) + (end_a.copies - loop_mark_a.copies);
    }

    if (report.iterations == 0) {
        result.x.assign(x0.begin(), x0.end());
        return result;
    }
    // Gather: the host keeps its own x slice and receives the accelerator's.
    std::promise<CopyHandle> gather;
    auto gather_handle = gather.get_future();
    auto send = accel.submit([&] {
        hand_off(gather, [&] {
            return channels.to_host.copy_async(accel, host, {{"x", 0, as.count, "x_accel"}});
        });
    });
    auto receive = host.submit([&] {
        channels.to_host.wait(gather_handle.get());
        Vector x(n);
        const auto& xh = host.store().at("x");
        const auto& xa = host.store().at("x_accel");
        std::copy(xh.begin(), xh.end(), x.begin());
        std::copy(xa.begin(), xa.end(), x.begin() + static_cast<std::ptrdiff_t>(hs.count));
        return x;
    });
    send.wait();
    receive.wait();
    send.get();
    result.x = receive.get();

    const auto total_values = (channels.to_host.values_moved() - setup_mark_h.values) +
                              (channels.to_accel.values_moved() - setup_mark_a.values);
    const auto total_copies = (channels.to_host.copies_issued() - setup_mark_h.copies) +
                              (channels.to_accel.copies_issued() - setup_mark_a.copies);
    result.transfers.setup_values = total_values - result.transfers.iteration_values;
    result.transfers.setup_copies = total_copies - result.transfers.iteration_copies;
    return result;
}

}  // namespace hybridcg
