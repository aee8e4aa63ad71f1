#include "hybridcg/bench/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "hybridcg/errors.hpp"
#include "hybridcg/hetero/hybrid.hpp"
#include "hybridcg/solvers/solvers.hpp"

namespace hybridcg::bench {
namespace {

using Clock = std::chrono::steady_clock;

SolverConfig solver_config(const CliOptions& o) {
    SolverConfig cfg;
    cfg.tolerance = o.problem.tolerance;
    cfg.max_iterations = o.problem.max_iterations;
    cfg.record_history = o.history;
    cfg.drift_check_interval = o.drift_every;
    return cfg;
}

RunRecord empty_record(const Problem& problem, const std::string& strategy, const CliOptions& o) {
    RunRecord rec;
    rec.problem = problem.id;
    rec.n = problem.a.n_rows();
    rec.nnz = problem.a.nnz();
    rec.strategy = strategy;
    rec.tolerance = o.problem.tolerance;
    rec.max_iterations = o.problem.max_iterations;
    rec.report.strategy = strategy;
    rec.devices = o.devices();
    rec.timestamp = utc_timestamp();
    return rec;
}

std::string format_real(double v) {
    if (std::isnan(v)) {
        return {};
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_row(const RunRecord& r, double speedup) {
    const auto wall_ms = r.report.phase_times.contains("total") ? r.report.phase_times.at("total") * 1e3
                                                                : std::numeric_limits<double>::quiet_NaN();
    std::ostringstream os;
    os << r.problem << ',' << r.n << ',' << r.nnz << ',' << r.strategy << ',' << r.report.iterations << ','
       << (r.error ? "failed" : (r.report.converged ? "true" : "false")) << ','
       << format_real(r.report.final_norm) << ',' << format_real(wall_ms) << ','
       << r.transfers.iteration_values + r.transfers.setup_values << ','
       << format_real(r.report.verification_error) << ',' << format_real(speedup);
    return os.str();
}

int usage_error(std::ostream& err, const std::string& message) {
    err << "error: " << message << '\n';
    return kExitUsage;
}

// Writes through `write` to --out or to `out`; false if the file cannot be opened.
bool emit(const CliOptions& o, std::ostream& out, const std::function<void(std::ostream&)>& write) {
    if (!o.out) {
        write(out);
        return true;
    }
    std::ofstream file(*o.out);
    if (!file) {
        return false;
    }
    write(file);
    return static_cast<bool>(file);
}

// Builds the problem, mapping every input failure to a usage exit.
std::optional<Problem> load_problem(const CliOptions& o, std::ostream& err, int& code) {
    try {
        o.devices().host.validate();
        o.devices().accel.validate();
        return build_problem(o.problem);
    } catch (const std::exception& e) {
        code = usage_error(err, e.what());
        return std::nullopt;
    }
}

RunRecord run_or_record_failure(const Problem& problem, const std::string& strategy, const CliOptions& o) {
    try {
        return run_strategy(problem, strategy, o);
    } catch (const BreakdownError& e) {
        auto rec = empty_record(problem, strategy, o);
        rec.report.iterations = e.iteration();
        rec.error = e.what();
        return rec;
    }
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (!part.empty()) {
                out.push_back(part);
            }
        }
    }
    return out;
}

}  // namespace

DeviceSnapshot CliOptions::devices() const {
    DeviceSnapshot s;
    s.host = {host_workers, host_throttle};
    s.accel = {accel_workers, accel_throttle};
    s.channel.latency = std::chrono::microseconds(xfer_latency_us);
    s.channel.bandwidth = xfer_bandwidth_mbps * 1e6;
    return s;
}

bool is_strategy(const std::string& name) {
    return std::find(std::begin(kStrategies), std::end(kStrategies), name) != std::end(kStrategies);
}

RunRecord run_strategy(const Problem& problem, const std::string& strategy, const CliOptions& o) {
    if (!is_strategy(strategy)) {
        throw std::invalid_argument("unknown strategy '" + strategy + "'");
    }
    const auto cfg = solver_config(o);
    auto rec = empty_record(problem, strategy, o);
    const auto& a = problem.a;
    const auto start = Clock::now();
    Vector x;
    if (strategy == "pcg" || strategy == "pipecg") {
        auto res = strategy == "pcg" ? pcg_solve(a, problem.b, problem.x0, problem.pc, cfg)
                                     : pipecg_solve(a, problem.b, problem.x0, problem.pc, cfg);
        x = std::move(res.x);
        rec.report = std::move(res.report);
    } else {
        const auto snap = o.devices();
        DevicePair devices(snap.host, snap.accel);
        HybridResult res;
        if (strategy == "hybrid3") {
            ChannelPair channels(snap.channel);
            Hybrid3Options opts;
            opts.pinned_r_host = o.pin_ratio;
            opts.profile_rows = o.profile_rows;
            res = hybrid3_solve(a, problem.b, problem.x0, problem.pc, cfg, devices, channels, opts);
        } else {
            TransferChannel channel(snap.channel);
            res = strategy == "hybrid1"
                      ? hybrid1_solve(a, problem.b, problem.x0, problem.pc, cfg, devices, channel)
                      : hybrid2_solve(a, problem.b, problem.x0, problem.pc, cfg, devices, channel);
        }
        x = std::move(res.x);
        rec.report = std::move(res.report);
        rec.transfers = res.transfers;
        rec.profile = res.profile;
        rec.partition = res.partition;
    }
    rec.report.phase_times["total"] = std::chrono::duration<double>(Clock::now() - start).count();
    rec.report.verification_error = max_abs_diff(x, problem.x_true);
    return rec;
}

int cmd_solve(const CliOptions& o, std::ostream& out, std::ostream& err) {
    if (!is_strategy(o.strategy)) {
        return usage_error(err, "--strategy must be one of pcg, pipecg, hybrid1, hybrid2, hybrid3");
    }
    int code = kExitOk;
    const auto problem = load_problem(o, err, code);
    if (!problem) {
        return code;
    }
    const auto rec = run_or_record_failure(*problem, o.strategy, o);
    const bool csv = o.format == OutputFormat::Csv;
    const bool written = emit(o, out, [&](std::ostream& os) {
        if (csv) {
            os << kCsvHeader << '\n' << csv_row(rec, 1.0) << '\n';
        } else {
            os << to_json(rec).dump(2) << '\n';
        }
    });
    if (!written) {
        return usage_error(err, "cannot write " + *o.out);
    }
    if (rec.error) {
        err << *rec.error << '\n';
        return kExitBreakdown;
    }
    return rec.report.converged ? kExitOk : kExitNotConverged;
}

int cmd_compare(const CliOptions& o, std::ostream& out, std::ostream& err) {
    if (o.strategies.empty()) {
        return usage_error(err, "--strategies needs at least one strategy");
    }
    for (const auto& s : o.strategies) {
        if (!is_strategy(s)) {
            return usage_error(err, "unknown strategy '" + s + "'");
        }
    }
    const auto baseline = o.baseline.empty() ? o.strategies.front() : o.baseline;
    if (std::find(o.strategies.begin(), o.strategies.end(), baseline) == o.strategies.end()) {
        return usage_error(err, "--baseline must be one of the compared strategies");
    }
    int code = kExitOk;
    const auto problem = load_problem(o, err, code);
    if (!problem) {
        return code;
    }

    std::vector<RunRecord> records;
    for (const auto& s : o.strategies) {
        records.push_back(run_or_record_failure(*problem, s, o));
    }
    const auto& base = *std::find_if(records.begin(), records.end(),
                                     [&](const RunRecord& r) { return r.strategy == baseline; });
    std::vector<double> speedups;
    bool all_ok = true;
    for (const auto& r : records) {
        const bool ok = !r.error && r.report.converged;
        all_ok = all_ok && ok;
        const bool usable = !r.error && !base.error;
        speedups.push_back(usable ? base.report.phase_times.at("total") / r.report.phase_times.at("total")
                                  : std::numeric_limits<double>::quiet_NaN());
    }
    // The baseline's own ratio is 1 by definition, not by division.
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].strategy == baseline && !records[i].error) {
            speedups[i] = 1.0;
        }
    }

    const bool json_out = o.format == OutputFormat::Json;
    const bool written = emit(o, out, [&](std::ostream& os) {
        if (json_out) {
            nlohmann::json runs = nlohmann::json::array();
            for (std::size_t i = 0; i < records.size(); ++i) {
                auto j = to_json(records[i]);
                j["speedup"] = std::isnan(speedups[i]) ? nlohmann::json(nullptr) : nlohmann::json(speedups[i]);
                runs.push_back(std::move(j));
            }
            os << nlohmann::json{{"baseline", baseline}, {"runs", runs}}.dump(2) << '\n';
        } else {
            os << kCsvHeader << '\n';
            for (std::size_t i = 0; i < records.size(); ++i) {
                os << csv_row(records[i], speedups[i]) << '\n';
            }
        }
    });
    if (!written) {
        return usage_error(err, "cannot write " + *o.out);
    }
    return all_ok ? kExitOk : kExitNotConverged;
}

int cmd_profile(const CliOptions& o, std::ostream& out, std::ostream& err) {
    if (o.format == OutputFormat::Csv) {
        return usage_error(err, "profile output is JSON only");
    }
    int code = kExitOk;
    const auto problem = load_problem(o, err, code);
    if (!problem) {
        return code;
    }
    const auto& a = problem->a;
    const auto snap = o.devices();
    DevicePair devices(snap.host, snap.accel);
    const bool partial = o.profile_rows > 0 && o.profile_rows < a.n_rows();
    const auto profiled_nnz = partial ? a.row_offsets()[o.profile_rows] : a.nnz();
    DeviceProfile profile;
    if (o.pin_ratio) {
        profile = DeviceProfile::pinned_ratio(*o.pin_ratio, profiled_nnz);
    } else if (partial) {
        profile = profile_devices(a.row_block(0, o.profile_rows), devices.host, devices.accel);
    } else {
        profile = profile_devices(a, devices.host, devices.accel);
    }
    const auto target = derive_split(profile, a.nnz());
    const auto partition = decompose_2d(a, decompose_1d(a, target));

    nlohmann::json j{{"problem", problem->id},
                     {"n", a.n_rows()},
                     {"nnz", a.nnz()},
                     {"profile", to_json(profile)},
                     {"nnz_host_target", target},
                     {"partition", to_json(partition.summary())}};
    if (!emit(o, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; })) {
        return usage_error(err, "cannot write " + *o.out);
    }
    return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pipelined and hybrid conjugate gradient benchmarks"};
    app.require_subcommand(1);

    CliOptions o;
    std::string matrix;
    std::size_t poisson = 0;
    std::string format;
    std::vector<std::string> strategies;

    auto add_common = [&](CLI::App* sub) {
        auto* m = sub->add_option("--matrix", matrix, "Matrix Market file");
        auto* p = sub->add_option("--poisson", poisson, "125-point Poisson grid side n (N = n^3)");
        m->excludes(p);
        p->excludes(m);
        sub->add_option("--tol", o.problem.tolerance, "Absolute tolerance on sqrt((u,u))")
            ->capture_default_str();
        sub->add_option("--max-iters", o.problem.max_iterations)->capture_default_str();
        sub->add_option("--host-workers", o.host_workers)->check(CLI::PositiveNumber);
        sub->add_option("--accel-workers", o.accel_workers)->check(CLI::PositiveNumber);
        sub->add_option("--host-throttle", o.host_throttle)->check(CLI::Range(1.0, 1e9));
        sub->add_option("--accel-throttle", o.accel_throttle)->check(CLI::Range(1.0, 1e9));
        sub->add_option("--xfer-latency-us", o.xfer_latency_us);
        sub->add_option("--xfer-bandwidth-mbps", o.xfer_bandwidth_mbps, "0 = unlimited")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--pin-ratio", o.pin_ratio, "Fixed host share for hybrid3")
            ->check(CLI::Range(0.0, 1.0));
        sub->add_option("--profile-rows", o.profile_rows, "Profile on the first R rows only");
        sub->add_flag("--history", o.history, "Record per-iteration norms");
        sub->add_option("--drift-every", o.drift_every, "Drift sample interval (reference solvers)");
        sub->add_option("--out", o.out, "Output path (default stdout)");
        sub->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--seed", o.seed, "Reserved; solvers are deterministic");
    };

    auto* solve = app.add_subcommand("solve", "Run one strategy and print its run record");
    add_common(solve);
    solve->add_option("--strategy", o.strategy)->required()->check(CLI::IsMember(
        std::vector<std::string>(std::begin(kStrategies), std::end(kStrategies))));

    auto* compare = app.add_subcommand("compare", "Run several strategies on one problem");
    add_common(compare);
    compare->add_option("--strategies", strategies, "Comma-separated list")->required()->delimiter(',');
    compare->add_option("--baseline", o.baseline, "Strategy with speedup 1 (default: first)");

    auto* profile = app.add_subcommand("profile", "Measure relative SPMV speed and show the split");
    add_common(profile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (!matrix.empty()) {
        o.problem.matrix_path = matrix;
    }
    if (poisson != 0 || (solve->count("--poisson") + compare->count("--poisson") + profile->count("--poisson")) > 0) {
        o.problem.poisson_n = poisson;
    }
    if (!o.problem.matrix_path && !o.problem.poisson_n) {
        return usage_error(err, "one of --matrix or --poisson is required");
    }
    if (!format.empty()) {
        o.format = format == "csv" ? OutputFormat::Csv : OutputFormat::Json;
    }
    o.strategies = split_list(strategies);

    try {
        if (solve->parsed()) {
            return cmd_solve(o, out, err);
        }
        if (compare->parsed()) {
            return cmd_compare(o, out, err);
        }
        return cmd_profile(o, out, err);
    } catch (const std::exception& e) {
        return usage_error(err, e.what());
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back("hybridcg");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace hybridcg::bench
