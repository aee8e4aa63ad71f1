#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "../support/oracles.hpp"
#include "hybridcg/errors.hpp"
#include "hybridcg/hetero/device.hpp"
#include "hybridcg/hetero/partition.hpp"
#include "hybridcg/hetero/performance_model.hpp"
#include "hybridcg/hetero/transfer.hpp"
#include "hybridcg/hetero/worker_pool.hpp"
#include "hybridcg/sparse/kernels.hpp"
#include "hybridcg/sparse/matrix_market.hpp"
#include "hybridcg/sparse/poisson.hpp"
#include "hybridcg/sparse/row_range_view.hpp"

using namespace hybridcg;
using namespace std::chrono_literals;

namespace {

const std::string kData = HYBRIDCG_TEST_DATA;

double seconds(std::chrono::nanoseconds ns) { return std::chrono::duration<double>(ns).count(); }

// Row-major listing of the entries of a view as (row, col) pairs, phase by phase.
void check_view_locality(const RowRangeView& v) {
    const auto off = v.row_offsets();
    const auto split = v.split_offsets();
    for (std::size_t i = 0; i < v.row_count(); ++i) {
        REQUIRE(split[i] >= off[i]);
        REQUIRE(split[i] <= off[i + 1]);
        for (auto k = off[i]; k < off[i + 1]; ++k) {
            REQUIRE(v.is_local_column(v.col_indices()[k]) == (k < split[i]));
        }
    }
}

CsrMatrix lengths_matrix(const std::vector<std::size_t>& lengths) {
    std::vector<std::size_t> r, c;
    std::vector<double> v;
    const std::size_t n = *std::max_element(lengths.begin(), lengths.end()) + lengths.size();
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        for (std::size_t k = 0; k < lengths[i]; ++k) {
            r.push_back(i);
            c.push_back(k);
            v.push_back(1.0);
        }
    }
    return CsrMatrix::from_triplets(lengths.size(), n, r, c, v);
}

CsrMatrix block_diagonal(std::size_t n1, std::size_t n2) {
    std::vector<std::size_t> r, c;
    std::vector<double> v;
    auto block = [&](std::size_t first, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j || (i > j ? i - j : j - i) == 1) {
                    r.push_back(first + i);
                    c.push_back(first + j);
                    v.push_back(i == j ? 4.0 : -1.0);
                }
            }
        }
    };
    block(0, n1);
    block(n1, n2);
    return CsrMatrix::from_triplets(n1 + n2, n1 + n2, r, c, v);
}

}  // namespace

TEST_SUITE("worker pool") {
    TEST_CASE("covers every index exactly once") {
        for (std::size_t workers : {1u, 2u, 3u, 4u}) {
            WorkerPool pool(workers);
            CHECK(pool.size() == workers);
            for (std::size_t n : {0u, 1u, 100u, 5000u, 20011u}) {
                std::vector<std::atomic<int>> hits(n);
                pool.parallel_for(n, [&](std::size_t f, std::size_t l) {
                    for (auto i = f; i < l; ++i) hits[i]++;
                });
                for (auto& h : hits) REQUIRE(h.load() == 1);
            }
        }
    }

    TEST_CASE("propagates exceptions") {
        WorkerPool pool(3);
        CHECK_THROWS_AS(pool.parallel_for(30000,
                                          [](std::size_t f, std::size_t) {
                                              if (f > 0) throw std::runtime_error("boom");
                                          }),
                        std::runtime_error);
        std::atomic<std::size_t> total{0};
        pool.parallel_for(30000, [&](std::size_t f, std::size_t l) { total += l - f; });
        CHECK(total == 30000);
    }

    TEST_CASE("zero workers rejected") { CHECK_THROWS_AS(WorkerPool(0), std::invalid_argument); }
}

TEST_SUITE("device") {
    TEST_CASE("config validation") {
        CHECK_THROWS_AS((DeviceConfig{0, 1.0}.validate()), std::invalid_argument);
        CHECK_THROWS_AS((DeviceConfig{1, 0.5}.validate()), std::invalid_argument);
        CHECK_THROWS_AS((DeviceConfig{1, NAN}.validate()), std::invalid_argument);
        CHECK_THROWS_AS(Device(DeviceId::Host, {1, 0.9}), std::invalid_argument);
        CHECK(to_string(DeviceId::Host) == "host");
        CHECK(to_string(DeviceId::Accel) == "accel");
    }

    TEST_CASE("stream runs tasks in submission order") {
        Device d(DeviceId::Accel, {2, 1.0});
        std::vector<int> order;
        std::vector<std::future<void>> fs;
        for (int i = 0; i < 50; ++i) fs.push_back(d.submit([&, i] { order.push_back(i); }));
        for (auto& f : fs) f.get();
        for (int i = 0; i < 50; ++i) CHECK(order[i] == i);
        CHECK(d.submit([] { return 42; }).get() == 42);
    }

    TEST_CASE("task exceptions reach the future") {
        Device d(DeviceId::Host, {});
        auto f = d.submit([] { throw std::logic_error("x"); });
        CHECK_THROWS_AS(f.get(), std::logic_error);
        CHECK(d.submit([] { return 1; }).get() == 1);
    }

    TEST_CASE("store holds one buffer per name") {
        Device d(DeviceId::Host, {});
        d.store().put("v", Vector{1, 2});
        d.store().put("v", Vector{3});
        CHECK(d.store().at("v") == Vector{3});
        CHECK(d.store().contains("v"));
        CHECK_THROWS_AS(d.store().at("missing"), std::out_of_range);
        d.store().clear();
        CHECK_FALSE(d.store().contains("v"));
    }

    TEST_CASE("throttle stretches kernel occupancy") {
        Device fast(DeviceId::Host, {1, 1.0});
        Device slow(DeviceId::Accel, {1, 4.0});
        auto work = [] {
            const auto until = std::chrono::steady_clock::now() + 2ms;
            while (std::chrono::steady_clock::now() < until) {
            }
        };
        for (int i = 0; i < 5; ++i) {
            fast.submit([&] { fast.run_kernel(work); }).get();
            slow.submit([&] { slow.run_kernel(work); }).get();
        }
        const double ratio = slow.busy_seconds() / fast.busy_seconds();
        CHECK(ratio > 3.0);
        CHECK(ratio < 5.5);
        slow.reset_busy();
        CHECK(slow.busy_seconds() == 0.0);
    }
}

TEST_SUITE("transfer channel") {
    TEST_CASE("zero latency copy lands on wait") {
        Device h(DeviceId::Host, {});
        Device a(DeviceId::Accel, {});
        a.store().put("w", Vector{1, 2, 3});
        TransferChannel ch;
        auto handle = ch.copy_async(a, h, {{"w"}});
        CHECK(handle.values() == 3);
        CHECK_FALSE(h.store().contains("w"));
        CHECK(ch.wait(handle) < 1ms);
        CHECK(h.store().at("w") == Vector{1, 2, 3});
        CHECK(ch.wait(handle) == 0ns);
        CHECK(ch.values_moved() == 3);
        CHECK(ch.copies_issued() == 1);
        ch.reset_counters();
        CHECK(ch.values_moved() == 0);
    }

    TEST_CASE("delay follows latency and bandwidth") {
        TransferChannel ch({0ns, 8e6});
        CHECK(seconds(ch.simulated_delay(3 * 1000 * 8)) == doctest::Approx(3.0 * 1000 * 8 / 8e6).epsilon(1e-6));
        TransferChannel lat({2ms, 8e9});
        CHECK(lat.simulated_delay(8) == 2ms);

        Device h(DeviceId::Host, {});
        Device a(DeviceId::Accel, {});
        for (const char* name : {"w", "r", "u"}) a.store().put(name, Vector(1000, 1.0));
        const auto start = std::chrono::steady_clock::now();
        auto handle = ch.copy_async(a, h, {{"w"}, {"r"}, {"u"}});
        ch.wait(handle);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        CHECK(elapsed >= 3.0 * 1000 * 8 / 8e6);
        CHECK(elapsed <= 3.0 * 1000 * 8 / 8e6 + 2e-3);
        CHECK(ch.values_moved() == 3000);
    }

    TEST_CASE("payload is captured at issue") {
        Device h(DeviceId::Host, {});
        Device a(DeviceId::Accel, {});
        a.store().put("n", Vector{1, 2});
        TransferChannel ch;
        auto handle = ch.copy_async(a, h, {{"n"}});
        a.store().at("n")[0] = 99;
        ch.wait(handle);
        CHECK(h.store().at("n") == Vector{1, 2});
    }

    TEST_CASE("slices land at their offset and may be renamed") {
        Device h(DeviceId::Host, {});
        Device a(DeviceId::Accel, {});
        a.store().put("m", Vector{1, 2, 3, 4, 5});
        h.store().put("m", Vector(5, 0.0));
        TransferChannel ch;
        ch.wait(ch.copy_async(a, h, {{"m", 2, 2}}));
        CHECK(h.store().at("m") == Vector{0, 0, 3, 4, 0});
        ch.wait(ch.copy_async(a, h, {{"m", 0, 3, "head"}}));
        CHECK(h.store().at("head") == Vector{1, 2, 3});
        CHECK(ch.values_moved() == 5);
    }

    TEST_CASE("errors") {
        Device h(DeviceId::Host, {});
        Device a(DeviceId::Accel, {});
        a.store().put("x", Vector{1});
        TransferChannel ch({1ms, 0});
        CHECK_THROWS_AS(ch.copy_async(a, h, {{"nope"}}), std::out_of_range);
        CHECK_THROWS_AS(ch.copy_async(a, h, {{"x", 5}}), std::out_of_range);
        auto first = ch.copy_async(a, h, {{"x"}});
        CHECK_THROWS_AS(ch.copy_async(a, h, {{"x"}}), ContractViolation);
        ch.wait(first);
        CHECK_NOTHROW(ch.wait(ch.copy_async(a, h, {{"x"}})));
        CHECK_THROWS_AS(ch.wait(CopyHandle{}), ContractViolation);
        TransferChannel other;
        auto foreign = other.copy_async(a, h, {{"x"}});
        CHECK_THROWS_AS(ch.wait(foreign), ContractViolation);
    }
}

TEST_SUITE("performance model") {
    TEST_CASE("injected times") {
        const auto p = DeviceProfile::from_times(2.0, 1.0, 300);
        CHECK(p.s_host == 150.0);
        CHECK(p.s_accel == 300.0);
        CHECK(p.r_host == 1.0 / 3.0);
        CHECK(p.r_accel == 1.0 - 1.0 / 3.0);
        CHECK(p.r_host + p.r_accel == 1.0);
        CHECK_FALSE(p.degenerate);
    }

    TEST_CASE("zero time is clamped and flagged") {
        const auto p = DeviceProfile::from_times(0.0, 1.0, 10);
        CHECK(p.degenerate);
        CHECK(p.t_host > 0.0);
        CHECK(std::isfinite(p.r_host));
        CHECK(p.r_host + p.r_accel == 1.0);
        CHECK_THROWS_AS(DeviceProfile::from_times(-1.0, 1.0, 10), std::invalid_argument);
    }

    TEST_CASE("pinned ratio") {
        const auto p = DeviceProfile::pinned_ratio(0.25, 100);
        CHECK(p.r_host == 0.25);
        CHECK(p.r_accel == 0.75);
        CHECK(p.pinned);
        CHECK(std::isnan(p.t_host));
        CHECK_THROWS_AS(DeviceProfile::pinned_ratio(1.5, 1), std::invalid_argument);
    }

    TEST_CASE("derive_split examples") {
        CHECK(derive_split(DeviceProfile::pinned_ratio(0.5, 10), 10) == 5);
        CHECK(derive_split(DeviceProfile::from_times(2.0, 1.0, 300), 300) == 100);
        CHECK(derive_split(DeviceProfile::pinned_ratio(0.0, 10), 10) == 0);
        CHECK(derive_split(DeviceProfile::pinned_ratio(1.0, 10), 10) == 10);
    }

    TEST_CASE("property: split is monotone in the ratio and exact-summing") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 1000; ++trial) {
            const double r1 = u(rng), r2 = u(rng);
            const std::size_t nnz = 1 + rng() % 1000000;
            const auto lo = std::min(r1, r2), hi = std::max(r1, r2);
            REQUIRE(derive_split(DeviceProfile::pinned_ratio(lo, nnz), nnz) <=
                    derive_split(DeviceProfile::pinned_ratio(hi, nnz), nnz));
            const auto p = DeviceProfile::from_times(1e-6 + u(rng), 1e-6 + u(rng), nnz);
            REQUIRE(p.r_host + p.r_accel == 1.0);
        }
    }

    TEST_CASE("identical devices split near even") {
        const auto a = generate_poisson125(12);
        Device h(DeviceId::Host, {1, 1.0});
        Device x(DeviceId::Accel, {1, 1.0});
        int inside = 0;
        for (int i = 0; i < 5; ++i) {
            const auto p = profile_devices(a, h, x);
            CHECK(p.profiled_nnz == a.nnz());
            CHECK(p.r_host + p.r_accel == 1.0);
            inside += (p.r_host >= 0.4 && p.r_host <= 0.6);
        }
        CHECK(inside >= 4);
        CHECK_THROWS_AS(profile_devices(a, h, x, 0), std::invalid_argument);
    }
}

TEST_SUITE("two-phase spmv") {
    TEST_CASE("empty remote part reproduces the full rows") {
        const auto a = block_diagonal(4, 5);
        const auto view = RowRangeView::build(a, 0, 4, 0, 4);
        CHECK(view.remote_nnz() == 0);
        PhasedSegment y(4);
        const Vector x{1, 2, 3, 4, 5, 6, 7, 8, 9};
        spmv_phase(view, SpmvPhase::Local, x, y);
        const auto full = spmv(a, x);
        for (std::size_t i = 0; i < 4; ++i) CHECK(y.values()[i] == full[i]);
    }

    TEST_CASE("coupled 5x5 over host rows") {
        const auto a = read_matrix_market(kData + "/coupled5.mtx");
        const auto view = RowRangeView::build(a, 0, 2, 0, 2);
        check_view_locality(view);
        PhasedSegment y(2);
        const Vector x{1.5, -2, 0.25, 3, 5};
        spmv_phase(view, SpmvPhase::Local, x, y);
        CHECK(y.completed_phase() == 1);
        spmv_phase(view, SpmvPhase::Remote, x, y);
        CHECK(y.completed_phase() == 2);
        const auto full = spmv(a, x);
        CHECK(y.values()[0] == doctest::Approx(full[0]).epsilon(1e-13));
        CHECK(y.values()[1] == doctest::Approx(full[1]).epsilon(1e-13));
    }

    TEST_CASE("phase 1 ignores values outside the local range") {
        std::mt19937_64 rng(8);
        const auto a = oracle::random_positive_sparse(40, 0.2, rng);
        const auto x = oracle::random_vector(40, rng, 0.5, 1.5);
        auto garbage = x;
        for (std::size_t j = 0; j < 40; ++j) {
            if (j < 10 || j >= 25) garbage[j] = 1e300;
        }
        const auto view = RowRangeView::build(a, 10, 15, 10, 25);
        PhasedSegment y(15);
        spmv_phase(view, SpmvPhase::Local, garbage, y);
        spmv_phase(view, SpmvPhase::Remote, x, y);
        const auto full = spmv(a, x);
        for (std::size_t i = 0; i < 15; ++i) {
            REQUIRE(std::abs(y.values()[i] - full[10 + i]) <= 1e-13 * std::abs(full[10 + i]));
        }
    }

    TEST_CASE("phase order is enforced") {
        const auto a = generate_poisson125(5);
        const auto view = RowRangeView::build(a, 0, 50, 0, 50);
        PhasedSegment y(50);
        const Vector x(125, 1.0);
        CHECK_THROWS_AS(spmv_phase(view, SpmvPhase::Remote, x, y), ContractViolation);
        spmv_phase(view, SpmvPhase::Local, x, y);
        spmv_phase(view, SpmvPhase::Remote, x, y);
        CHECK_THROWS_AS(spmv_phase(view, SpmvPhase::Remote, x, y), ContractViolation);
        y.reset();
        CHECK(y.completed_phase() == 0);
        CHECK_THROWS_AS(spmv_phase(view, SpmvPhase::Remote, x, y), ContractViolation);
        PhasedSegment wrong(3);
        CHECK_THROWS_AS(spmv_phase(view, SpmvPhase::Local, x, wrong), DimensionMismatch);
        CHECK_THROWS_AS(spmv_phase(view, SpmvPhase::Local, Vector(3), y), DimensionMismatch);
    }

    TEST_CASE("chunked runner gives the same result") {
        const auto a = generate_poisson125(10);
        const auto view = RowRangeView::build(a, 300, 700, 300, 1000);
        std::mt19937_64 rng(1);
        const auto x = oracle::random_vector(1000, rng);
        PhasedSegment y1(700), y2(700);
        WorkerPool pool(3);
        RangeRunner runner = [&](std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
            pool.parallel_for(n, body);
        };
        spmv_phase(view, SpmvPhase::Local, x, y1);
        spmv_phase(view, SpmvPhase::Remote, x, y1);
        spmv_phase(view, SpmvPhase::Local, x, y2, runner);
        spmv_phase(view, SpmvPhase::Remote, x, y2, runner);
        CHECK(std::equal(y1.values().begin(), y1.values().end(), y2.values().begin()));
    }

    TEST_CASE("view build rejects bad ranges and leaves the source intact") {
        const auto a = generate_poisson125(5);
        const auto copy = a;
        CHECK_THROWS_AS(RowRangeView::build(a, 100, 30, 0, 10), std::out_of_range);
        CHECK_THROWS_AS(RowRangeView::build(a, 0, 10, 20, 200), std::out_of_range);
        RowRangeView::build(a, 40, 40, 40, 80);
        CHECK(a == copy);
    }
}

TEST_SUITE("decomposition") {
    TEST_CASE("decompose_1d examples") {
        CHECK(decompose_1d(lengths_matrix({3, 3, 3, 3, 3}), 9) == 3);
        CHECK(decompose_1d(lengths_matrix({4, 3, 5, 2, 1}), 8) == 2);
        const auto a = lengths_matrix({4, 3, 5, 2, 1});
        CHECK(decompose_1d(a, a.nnz()) == 5);
        CHECK(decompose_1d(a, 0) == 0);
        CHECK(decompose_1d(a, 3) == 0);
        CHECK_THROWS_AS(decompose_1d(a, a.nnz() + 1), std::invalid_argument);
    }

    TEST_CASE("coupled 5x5 classification") {
        const auto a = read_matrix_market(kData + "/coupled5.mtx");
        const auto p = decompose_2d(a, 2);
        CHECK(p.n_host_rows == 2);
        CHECK(p.n_accel_rows == 3);
        CHECK(p.nnz1_host == 4);
        CHECK(p.nnz2_host == 2);
        CHECK(p.nnz1_accel == 7);
        CHECK(p.nnz2_accel == 2);
        const auto hv = p.host_view;
        // host row 1 (0-based 0): {1,2} local then {4}
        CHECK(std::vector<std::size_t>(hv.col_indices().begin(), hv.col_indices().end()) ==
              std::vector<std::size_t>{0, 1, 3, 0, 1, 4});
        const auto av = p.accel_view;
        CHECK(std::vector<std::size_t>(av.col_indices().begin(), av.col_indices().end()) ==
              std::vector<std::size_t>{2, 3, 2, 3, 4, 0, 3, 4, 1});
        const auto s = p.summary();
        CHECK(s == PartitionSummary{2, 3, 4, 2, 7, 2});
    }

    TEST_CASE("block diagonal split at the boundary") {
        const auto p = decompose_2d(block_diagonal(6, 9), 6);
        CHECK(p.nnz2_host == 0);
        CHECK(p.nnz2_accel == 0);
    }

    TEST_CASE("degenerate splits") {
        const auto a = generate_poisson125(5);
        const auto none = decompose_2d(a, 0);
        CHECK(none.n_host_rows == 0);
        CHECK(none.nnz1_accel == a.nnz());
        CHECK(none.nnz2_accel == 0);
        const auto all = decompose_2d(a, 125);
        CHECK(all.nnz1_host == a.nnz());
        CHECK_THROWS_AS(decompose_2d(a, 126), std::invalid_argument);
    }

    TEST_CASE("property: randomized partitions are complete and local") {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t n = 1 + rng() % (trial < 20 ? 500 : 80);
            const auto a = oracle::random_positive_sparse(n, 4.0 / static_cast<double>(n), rng);
            const double ratio = u(rng);
            const auto target = derive_split(DeviceProfile::pinned_ratio(ratio, a.nnz()), a.nnz());
            const auto k = decompose_1d(a, target);
            REQUIRE(a.row_offsets()[k] <= target);
            if (k < n) REQUIRE(a.row_offsets()[k + 1] > target);
            const auto p = decompose_2d(a, k);
            REQUIRE(p.n_host_rows + p.n_accel_rows == n);
            REQUIRE(p.nnz1_host + p.nnz2_host == a.row_offsets()[k]);
            REQUIRE(p.nnz1_accel + p.nnz2_accel == a.nnz() - a.row_offsets()[k]);
            check_view_locality(p.host_view);
            check_view_locality(p.accel_view);
            for (std::size_t t = 0; t < p.host_view.col_indices().size(); ++t) {
                REQUIRE(p.host_view.col_indices()[t] < n);
            }
            const auto x = oracle::random_vector(n, rng, 0.5, 1.5);
            const auto full = spmv(a, x);
            PhasedSegment yh(p.n_host_rows), ya(p.n_accel_rows);
            spmv_phase(p.host_view, SpmvPhase::Local, x, yh);
            spmv_phase(p.host_view, SpmvPhase::Remote, x, yh);
            spmv_phase(p.accel_view, SpmvPhase::Local, x, ya);
            spmv_phase(p.accel_view, SpmvPhase::Remote, x, ya);
            for (std::size_t i = 0; i < n; ++i) {
                const double got = i < k ? yh.values()[i] : ya.values()[i - k];
                REQUIRE(std::abs(got - full[i]) <= 1e-13 * std::abs(full[i]));
            }
        }
    }

    TEST_CASE("property: host rows grow with the target") {
        const auto a = generate_poisson125(6);
        std::size_t prev = 0;
        for (std::size_t t = 0; t <= a.nnz(); t += 97) {
            const auto k = decompose_1d(a, t);
            REQUIRE(k >= prev);
            prev = k;
        }
    }
}
