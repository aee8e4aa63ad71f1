#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hybridcg/bench/problem.hpp"
#include "hybridcg/bench/run_record.hpp"

namespace hybridcg::bench {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitBreakdown = 2,
    kExitNotConverged = 3,
};

enum class OutputFormat { Json, Csv };

/// Everything the CLI flags configure.
struct CliOptions {
    ProblemSpec problem;
    std::string strategy;
    std::vector<std::string> strategies;
    std::string baseline;
    std::size_t host_workers = 1;
    std::size_t accel_workers = 1;
    double host_throttle = 1.0;
    double accel_throttle = 1.0;
    std::size_t xfer_latency_us = 0;
    double xfer_bandwidth_mbps = 0.0;
    std::optional<double> pin_ratio;
    std::size_t profile_rows = 0;
    bool history = false;
    std::size_t drift_every = 0;
    std::optional<std::string> out;
    std::optional<OutputFormat> format;
    std::optional<std::uint64_t> seed;

    DeviceSnapshot devices() const;
};

inline constexpr const char* kStrategies[] = {"pcg", "pipecg", "hybrid1", "hybrid2", "hybrid3"};

bool is_strategy(const std::string& name);

/// Runs one strategy on a built problem with fresh devices and channels.
/// Throws BreakdownError on breakdown; verification_error is filled in.
RunRecord run_strategy(const Problem& problem, const std::string& strategy, const CliOptions& options);

int cmd_solve(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_compare(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_profile(const CliOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv (solve | compare | profile subcommands) and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

inline constexpr const char* kCsvHeader =
    "problem,N,nnz,strategy,iterations,converged,final_norm,wall_ms,transfer_values,verify_inf_err,speedup";

}  // namespace hybridcg::bench
