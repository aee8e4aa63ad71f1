#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/oracles.hpp"
#include "hybridcg/bench/commands.hpp"
#include "hybridcg/bench/problem.hpp"
#include "hybridcg/bench/run_record.hpp"
#include "hybridcg/errors.hpp"
#include "hybridcg/sparse/poisson.hpp"

using namespace hybridcg;
using namespace hybridcg::bench;
using nlohmann::json;

namespace {

const std::string kData = HYBRIDCG_TEST_DATA;

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("hybridcg_" + name);
}

}  // namespace

TEST_SUITE("problem") {
    TEST_CASE("identity manufactured solution") {
        oracle::Dense d(4, Vector(4, 0.0));
        for (int i = 0; i < 4; ++i) d[i][i] = 1.0;
        const auto p = build_problem("id4", oracle::from_dense(d));
        for (double v : p.x_true) CHECK(v == 0.5);
        CHECK(p.b == p.x_true);
        CHECK(p.x0 == Vector(4, 0.0));
    }

    TEST_CASE("poisson rows sum to one so b is constant") {
        ProblemSpec spec;
        spec.poisson_n = 6;
        const auto p = build_problem(spec);
        CHECK(p.id == "poisson-6");
        const double expected = 1.0 / std::sqrt(216.0);
        for (double v : p.b) REQUIRE(v == doctest::Approx(expected).epsilon(1e-14));
    }

    TEST_CASE("problem source validation") {
        ProblemSpec none;
        CHECK_THROWS_AS(none.validate(), std::invalid_argument);
        ProblemSpec both;
        both.poisson_n = 5;
        both.matrix_path = "x.mtx";
        CHECK_THROWS_AS(both.validate(), std::invalid_argument);
        ProblemSpec file;
        file.matrix_path = "/some/dir/bcsstk15.mtx";
        CHECK(file.id() == "bcsstk15");
        ProblemSpec bad_tol;
        bad_tol.poisson_n = 5;
        bad_tol.tolerance = 0.0;
        CHECK_THROWS_AS(bad_tol.validate(), std::invalid_argument);
    }

    TEST_CASE("non-square or zero-diagonal matrices are rejected") {
        const std::vector<std::size_t> rows{0, 1}, diag{0, 1}, anti{1, 0};
        const std::vector<double> ones{1.0, 1.0};
        const auto rect = CsrMatrix::from_triplets(2, 3, rows, diag, ones);
        CHECK_THROWS(build_problem("rect", rect));
        const auto zero = CsrMatrix::from_triplets(2, 2, rows, anti, ones);
        CHECK_THROWS_AS(build_problem("zero", zero), SetupError);
    }
}

TEST_SUITE("run record") {
    TEST_CASE("json round trip preserves every field") {
        ProblemSpec spec;
        spec.poisson_n = 5;
        const auto problem = build_problem(spec);
        CliOptions o;
        o.problem = spec;
        o.history = true;
        o.pin_ratio = 0.3;
        o.xfer_latency_us = 3;
        o.xfer_bandwidth_mbps = 1000;
        for (const char* s : kStrategies) {
            auto rec = run_strategy(problem, s, o);
            const auto back = record_from_json(json::parse(to_json(rec).dump()));
            CHECK(same_record(rec, back));
            rec.error = "boom";
            CHECK_FALSE(same_record(rec, back));
            CHECK(same_record(rec, record_from_json(to_json(rec))));
        }
    }

    TEST_CASE("NaN becomes null and comes back") {
        RunRecord rec;
        rec.problem = "p";
        rec.profile = DeviceProfile::pinned_ratio(0.25, 10);
        const auto j = to_json(rec);
        CHECK(j["report"]["final_norm"].is_null());
        CHECK(j["profile"]["t_host"].is_null());
        const auto back = record_from_json(j);
        CHECK(std::isnan(back.report.final_norm));
        CHECK(same_record(rec, back));
    }

    TEST_CASE("timestamp looks like ISO-8601 UTC") {
        const auto t = utc_timestamp();
        CHECK(t.size() == 20);
        CHECK(t[4] == '-');
        CHECK(t[10] == 'T');
        CHECK(t.back() == 'Z');
    }
}

TEST_SUITE("cli") {
    TEST_CASE("solve writes a converged record") {
        const auto r = cli({"solve", "--poisson", "8", "--strategy", "pipecg"});
        REQUIRE(r.code == kExitOk);
        const auto j = json::parse(r.out);
        CHECK(j["strategy"] == "pipecg");
        CHECK(j["n"] == 512);
        CHECK(j["report"]["converged"] == true);
        CHECK(j["report"]["verification_error"].get<double>() <= 1e-4);
    }

    TEST_CASE("missing matrix file is a usage error") {
        const auto r = cli({"solve", "--matrix", "missing.mtx", "--strategy", "pcg"});
        CHECK(r.code == kExitUsage);
        CHECK(r.err.find("missing.mtx") != std::string::npos);
    }

    TEST_CASE("argument errors") {
        CHECK(cli({}).code == kExitUsage);
        CHECK(cli({"solve", "--poisson", "8"}).code == kExitUsage);
        CHECK(cli({"solve", "--poisson", "8", "--strategy", "nope"}).code == kExitUsage);
        CHECK(cli({"solve", "--poisson", "8", "--matrix", "a.mtx", "--strategy", "pcg"}).code == kExitUsage);
        CHECK(cli({"solve", "--poisson", "3", "--strategy", "pcg"}).code == kExitUsage);
        CHECK(cli({"compare", "--poisson", "5", "--strategies", "pcg,bogus"}).code == kExitUsage);
        CHECK(cli({"profile", "--poisson", "5", "--format", "csv"}).code == kExitUsage);
        CHECK(cli({"solve", "--poisson", "5", "--strategy", "hybrid3", "--pin-ratio", "2"}).code == kExitUsage);
    }

    TEST_CASE("iteration cap gives the not-converged code") {
        const auto r = cli({"solve", "--poisson", "8", "--strategy", "hybrid2", "--max-iters", "2"});
        CHECK(r.code == kExitNotConverged);
        const auto j = json::parse(r.out);
        CHECK(j["report"]["iterations"] == 2);
    }

    TEST_CASE("breakdown gives its own code") {
        const auto path = temp_file("indefinite.mtx");
        {
            std::ofstream f(path);
            f << "%%MatrixMarket matrix coordinate real symmetric\n3 3 5\n1 1 1\n2 1 -4\n2 2 1\n3 2 -4\n3 3 1\n";
        }
        for (const char* s : {"pcg", "pipecg", "hybrid1", "hybrid2", "hybrid3"}) {
            const auto r = cli({"solve", "--matrix", path.string(), "--strategy", s, "--pin-ratio", "0.5"});
            CHECK(r.code == kExitBreakdown);
            CHECK(json::parse(r.out).contains("error"));
        }
        std::filesystem::remove(path);
    }

    TEST_CASE("hybrid3 with pinned ratio splits the coupling") {
        const auto r = cli({"solve", "--poisson", "8", "--strategy", "hybrid3", "--pin-ratio", "0.5"});
        REQUIRE(r.code == kExitOk);
        const auto j = json::parse(r.out);
        CHECK(j["partition"]["nnz2_host"].get<std::size_t>() > 0);
        CHECK(j["partition"]["nnz2_accel"].get<std::size_t>() > 0);
        CHECK(j["profile"]["r_host"] == 0.5);
    }

    TEST_CASE("compare on the identity") {
        const auto path = temp_file("identity.mtx");
        {
            std::ofstream f(path);
            f << "%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n";
        }
        const auto r = cli({"compare", "--matrix", path.string(), "--strategies", "pcg,pipecg"});
        REQUIRE(r.code == kExitOk);
        const auto rows = csv_rows(r.out);
        REQUIRE(rows.size() == 3);
        CHECK(r.out.substr(0, r.out.find('\n')) == kCsvHeader);
        for (std::size_t i = 1; i < 3; ++i) {
            CHECK(rows[i][4] == "1");
            CHECK(rows[i][5] == "true");
        }
        std::filesystem::remove(path);
    }

    TEST_CASE("compare all strategies on poisson") {
        const auto r = cli({"compare", "--poisson", "10", "--strategies", "pipecg,hybrid1,hybrid2,hybrid3",
                            "--baseline", "pipecg", "--pin-ratio", "0.5"});
        REQUIRE(r.code == kExitOk);
        const auto rows = csv_rows(r.out);
        REQUIRE(rows.size() == 5);
        const auto ref_iters = std::stol(rows[1][4]);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            REQUIRE(rows[i].size() == 11);
            CHECK(rows[i][0] == "poisson-10");
            CHECK(rows[i][1] == "1000");
            CHECK(rows[i][2] == rows[1][2]);
            CHECK(std::labs(std::stol(rows[i][4]) - ref_iters) <= 2);
            CHECK(std::stod(rows[i][9]) <= 1e-4);
        }
        CHECK(rows[1][3] == "pipecg");
        CHECK(std::stod(rows[1][10]) == 1.0);
        CHECK(rows[2][8] != "0");
    }

    TEST_CASE("compare json lists runs with speedups") {
        const auto r = cli({"compare", "--poisson", "6", "--strategies", "pcg,hybrid2", "--format", "json"});
        REQUIRE(r.code == kExitOk);
        const auto j = json::parse(r.out);
        CHECK(j["baseline"] == "pcg");
        REQUIRE(j["runs"].size() == 2);
        CHECK(j["runs"][0]["speedup"] == 1.0);
        CHECK(j["runs"][1]["speedup"].get<double>() > 0.0);
    }

    TEST_CASE("profile with a pinned ratio") {
        const auto r = cli({"profile", "--poisson", "8", "--pin-ratio", "0.25"});
        REQUIRE(r.code == kExitOk);
        const auto j = json::parse(r.out);
        CHECK(j["profile"]["r_host"] == 0.25);
        const std::size_t nnz = j["nnz"];
        CHECK(j["nnz_host_target"] == static_cast<std::size_t>(std::floor(0.25 * static_cast<double>(nnz))));
        CHECK(j["partition"]["n_host_rows"].get<std::size_t>() > 0);
    }

    TEST_CASE("profile on a row prefix") {
        const auto r = cli({"profile", "--poisson", "8", "--profile-rows", "50"});
        REQUIRE(r.code == kExitOk);
        const auto j = json::parse(r.out);
        const auto a = generate_poisson125(8);
        CHECK(j["profile"]["profiled_nnz"] == a.row_offsets()[50]);
        const double rh = j["profile"]["r_host"], ra = j["profile"]["r_accel"];
        CHECK(rh + ra == 1.0);
    }

    TEST_CASE("output file") {
        const auto path = temp_file("out.json");
        const auto r = cli({"solve", "--poisson", "5", "--strategy", "pcg", "--out", path.string()});
        REQUIRE(r.code == kExitOk);
        CHECK(r.out.empty());
        std::ifstream f(path);
        const auto j = json::parse(f);
        CHECK(j["strategy"] == "pcg");
        std::filesystem::remove(path);
    }

    TEST_CASE("property: every invocation maps to a documented exit code") {
        const std::vector<std::vector<std::string>> cases = {
            {"solve"},
            {"bogus"},
            {"--help"},
            {"solve", "--poisson", "5", "--strategy", "pcg", "--tol", "-1"},
            {"solve", "--poisson", "5", "--strategy", "pcg", "--tol", "1"},
            {"solve", "--poisson", "5", "--strategy", "pipecg", "--max-iters", "0"},
            {"solve", "--poisson", "5", "--strategy", "hybrid3", "--profile-rows", "10000"},
            {"compare", "--poisson", "5", "--strategies", "pcg", "--baseline", "hybrid1"},
            {"compare", "--poisson", "5", "--strategies", "pcg,pipecg", "--max-iters", "1"},
            {"profile", "--matrix", kData + "/coupled5.mtx"},
            {"solve", "--matrix", kData + "/general4.mtx", "--strategy", "hybrid1"},
        };
        for (const auto& args : cases) {
            const int code = cli(args).code;
            REQUIRE((code >= kExitOk && code <= kExitNotConverged));
        }
    }
}
