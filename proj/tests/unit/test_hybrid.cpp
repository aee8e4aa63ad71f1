#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "hybridcg/hetero/hybrid.hpp"
#include "hybridcg/solvers/solvers.hpp"
#include "hybridcg/sparse/poisson.hpp"

using namespace hybridcg;
using namespace std::chrono_literals;

namespace {

struct System {
    CsrMatrix a;
    Vector b;
    Vector x0;
    Vector x_true;
    JacobiPreconditioner pc;
};

System manufactured(CsrMatrix a) {
    System s;
    const auto n = a.n_rows();
    s.x_true.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));
    s.b = oracle::matvec(a, s.x_true);
    s.x0.assign(n, 0.0);
    s.pc = jacobi_setup(a);
    s.a = std::move(a);
    return s;
}

CsrMatrix identity(std::size_t n) {
    oracle::Dense d(n, Vector(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 1.0;
    return oracle::from_dense(d);
}

CsrMatrix tridiagonal_blocks(std::size_t n1, std::size_t n2) {
    oracle::Dense d(n1 + n2, Vector(n1 + n2, 0.0));
    auto block = [&](std::size_t first, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            d[first + i][first + i] = 4.0;
            if (i + 1 < n) d[first + i][first + i + 1] = d[first + i + 1][first + i] = -1.0;
        }
    };
    block(0, n1);
    block(n1, n2);
    return oracle::from_dense(d);
}

enum class Strategy { H1, H2, H3 };

HybridResult run(Strategy s, const System& sys, const SolverConfig& cfg, ChannelConfig channel = {},
                 Hybrid3Options opts = {}, const HybridObserver& obs = {}) {
    DevicePair devices({}, {});
    if (s == Strategy::H3) {
        ChannelPair channels(channel);
        return hybrid3_solve(sys.a, sys.b, sys.x0, sys.pc, cfg, devices, channels, opts, obs);
    }
    TransferChannel ch(channel);
    return s == Strategy::H1 ? hybrid1_solve(sys.a, sys.b, sys.x0, sys.pc, cfg, devices, ch, obs)
                             : hybrid2_solve(sys.a, sys.b, sys.x0, sys.pc, cfg, devices, ch, obs);
}

Hybrid3Options pinned(double r) {
    Hybrid3Options o;
    o.pinned_r_host = r;
    return o;
}

}  // namespace

TEST_SUITE("hybrid") {
    TEST_CASE("identity converges in one iteration") {
        const auto sys = manufactured(identity(3));
        for (auto s : {Strategy::H1, Strategy::H2, Strategy::H3}) {
            const auto res = run(s, sys, {}, {}, pinned(0.5));
            CHECK(res.report.converged);
            CHECK(res.report.iterations == 1);
            CHECK(oracle::inf_diff(res.x, sys.x_true) <= 1e-15);
        }
        const auto h1 = run(Strategy::H1, sys, {});
        CHECK(h1.transfers.iteration_copies == 1);
        CHECK(h1.transfers.iteration_values == 9);
        CHECK(h1.report.strategy == "hybrid1");
    }

    TEST_CASE("poisson accuracy matches the reference") {
        const auto sys = manufactured(generate_poisson125(8));
        SolverConfig cfg;
        const auto ref = pipecg_solve(sys.a, sys.b, sys.x0, sys.pc, cfg);
        for (auto s : {Strategy::H1, Strategy::H2, Strategy::H3}) {
            const auto res = run(s, sys, cfg, {}, pinned(0.4));
            CHECK(res.report.converged);
            CHECK(res.report.iterations + 2 >= ref.report.iterations);
            CHECK(res.report.iterations <= ref.report.iterations + 2);
            CHECK(oracle::inf_diff(res.x, sys.x_true) <= 1e-4);
            CHECK(oracle::inf_diff(res.x, ref.x) <= 1e-6);
            CHECK(res.report.final_norm < cfg.tolerance);
        }
    }

    TEST_CASE("per-iteration traffic") {
        const auto sys = manufactured(generate_poisson125(7));
        const std::size_t n = sys.a.n_rows();
        const auto h1 = run(Strategy::H1, sys, {});
        CHECK(h1.transfers.iteration_copies == h1.report.iterations);
        CHECK(h1.transfers.iteration_values == 3 * n * h1.report.iterations);
        const auto h2 = run(Strategy::H2, sys, {});
        CHECK(h2.transfers.iteration_copies == h2.report.iterations);
        CHECK(h2.transfers.iteration_values == n * h2.report.iterations);
        CHECK(h2.transfers.setup_copies == 1);
        CHECK(h2.transfers.setup_values == n);
        const auto h3 = run(Strategy::H3, sys, {}, {}, pinned(0.5));
        REQUIRE(h3.partition.has_value());
        CHECK(h3.partition->nnz2_host > 0);
        CHECK(h3.partition->nnz2_accel > 0);
        CHECK(h3.transfers.iteration_copies == 2 * h3.report.iterations);
        CHECK(h3.transfers.iteration_values == n * h3.report.iterations);
    }

    TEST_CASE("host replicas track the accelerator") {
        const auto sys = manufactured(generate_poisson125(7));
        std::size_t calls = 0;
        const auto res = run(Strategy::H2, sys, {}, {}, {}, [&](std::size_t, Device& host, Device& accel) {
            ++calls;
            for (const char* name : {"u", "r", "w"}) {
                const auto& h = host.store().at(name);
                const auto& a = accel.store().at(name);
                REQUIRE(oracle::inf_diff(h, a) <= 1e-12 * std::max(1.0, oracle::inf_norm(a)));
            }
        });
        CHECK(calls == res.report.iterations);
    }

    TEST_CASE("exact start performs no iterations and no copies") {
        auto sys = manufactured(generate_poisson125(5));
        sys.x0 = sys.x_true;
        sys.b = oracle::matvec(sys.a, sys.x0);
        for (auto s : {Strategy::H1, Strategy::H2}) {
            const auto res = run(s, sys, {});
            CHECK(res.report.iterations == 0);
            CHECK(res.report.converged);
            CHECK(res.transfers.iteration_copies == 0);
            CHECK(res.x == sys.x0);
        }
        const auto h2 = run(Strategy::H2, sys, {});
        CHECK(h2.transfers.setup_copies == 0);
        const auto h3 = run(Strategy::H3, sys, {}, {}, pinned(0.5));
        CHECK(h3.report.iterations == 0);
        CHECK(h3.x == sys.x0);
    }

    TEST_CASE("single-device split equals the reference solver") {
        const auto sys = manufactured(generate_poisson125(7));
        SolverConfig cfg;
        cfg.record_history = true;
        const auto ref = pipecg_solve(sys.a, sys.b, sys.x0, sys.pc, cfg);
        for (double r : {0.0, 1.0}) {
            const auto res = run(Strategy::H3, sys, cfg, {}, pinned(r));
            CHECK(res.report.iterations == ref.report.iterations);
            CHECK(oracle::inf_diff(res.x, ref.x) <= 1e-12);
            CHECK(res.transfers == TransferStats{});
            REQUIRE(res.partition.has_value());
            CHECK(res.partition->n_host_rows == (r == 0.0 ? 0u : sys.a.n_rows()));
        }
    }

    TEST_CASE("repeat runs are bitwise identical") {
        const auto sys = manufactured(generate_poisson125(7));
        SolverConfig cfg;
        cfg.record_history = true;
        for (auto s : {Strategy::H1, Strategy::H2, Strategy::H3}) {
            const auto a = run(s, sys, cfg, {}, pinned(0.3));
            const auto b = run(s, sys, cfg, {}, pinned(0.3));
            CHECK(a.x == b.x);
            CHECK(a.report.history == b.report.history);
        }
    }

    TEST_CASE("multi-worker devices agree with single workers") {
        const auto sys = manufactured(generate_poisson125(9));
        SolverConfig cfg;
        DevicePair one({1, 1.0}, {1, 1.0});
        DevicePair many({3, 1.0}, {2, 1.0});
        TransferChannel c1, c2;
        const auto a = hybrid2_solve(sys.a, sys.b, sys.x0, sys.pc, cfg, one, c1);
        const auto b = hybrid2_solve(sys.a, sys.b, sys.x0, sys.pc, cfg, many, c2);
        CHECK(a.report.iterations == b.report.iterations);
        CHECK(oracle::inf_diff(a.x, b.x) <= 1e-12);
    }

    TEST_CASE("decoupled blocks exchange nothing per iteration") {
        const auto sys = manufactured(tridiagonal_blocks(40, 40));
        const auto fast = run(Strategy::H3, sys, {}, {}, pinned(0.5));
        REQUIRE(fast.partition.has_value());
        CHECK(fast.partition->n_host_rows == 40);
        CHECK(fast.partition->nnz2_host == 0);
        CHECK(fast.partition->nnz2_accel == 0);
        CHECK(fast.transfers.iteration_copies == 0);
        CHECK(oracle::inf_diff(fast.x, sys.x_true) <= 1e-4);

        const auto slow = run(Strategy::H3, sys, {}, ChannelConfig{20ms, 0.0}, pinned(0.5));
        CHECK(slow.report.iterations == fast.report.iterations);
        CHECK(slow.x == fast.x);
        CHECK(slow.report.phase_times.at("iterate") < 0.5 * 0.020 * static_cast<double>(slow.report.iterations));
    }

    TEST_CASE("measured split is reported") {
        const auto sys = manufactured(generate_poisson125(8));
        Hybrid3Options opts;
        opts.profile_rows = 100;
        const auto res = run(Strategy::H3, sys, {}, {}, opts);
        REQUIRE(res.profile.has_value());
        CHECK_FALSE(res.profile->pinned);
        CHECK(res.profile->profiled_nnz == sys.a.row_offsets()[100]);
        CHECK(res.profile->r_host + res.profile->r_accel == 1.0);
        CHECK(res.report.converged);
        CHECK(res.report.phase_times.contains("profile"));
        CHECK(res.report.phase_times.contains("decompose"));
    }

    TEST_CASE("invalid inputs") {
        const auto sys = manufactured(generate_poisson125(5));
        SolverConfig bad;
        bad.tolerance = -1.0;
        CHECK_THROWS_AS(run(Strategy::H1, sys, bad), std::invalid_argument);
        auto wrong = sys;
        wrong.b.pop_back();
        CHECK_THROWS(run(Strategy::H2, wrong, {}));
        CHECK_THROWS(run(Strategy::H3, sys, {}, {}, pinned(1.5)));
    }
}
