#include "hybridcg/bench/run_record.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

namespace hybridcg::bench {
namespace {

using nlohmann::json;

json real(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double real_of(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

bool same_real(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

json to_json(const DeviceConfig& c) { return {{"workers", c.workers}, {"throttle", c.throttle}}; }

DeviceConfig device_from_json(const json& j) {
    return {j.at("workers").get<std::size_t>(), j.at("throttle").get<double>()};
}

json to_json(const SolveReport& r) {
    json drift = json::array();
    for (const auto& d : r.drift) {
        drift.push_back({{"iteration", d.iteration}, {"relative_gap", real(d.relative_gap)}});
    }
    json phases = json::object();
    for (const auto& [name, seconds] : r.phase_times) {
        phases[name] = real(seconds);
    }
    json history = json::array();
    for (double h : r.history) {
        history.push_back(real(h));
    }
    return {{"strategy", r.strategy},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"final_norm", real(r.final_norm)},
            {"history", history},
            {"drift", drift},
            {"phase_times", phases},
            {"verification_error", real(r.verification_error)}};
}

SolveReport report_from_json(const json& j) {
    SolveReport r;
    r.strategy = j.at("strategy").get<std::string>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.final_norm = real_of(j.at("final_norm"));
    for (const auto& h : j.at("history")) {
        r.history.push_back(real_of(h));
    }
    for (const auto& d : j.at("drift")) {
        r.drift.push_back({d.at("iteration").get<std::size_t>(), real_of(d.at("relative_gap"))});
    }
    for (const auto& [name, seconds] : j.at("phase_times").items()) {
        r.phase_times[name] = real_of(seconds);
    }
    r.verification_error = real_of(j.at("verification_error"));
    return r;
}

bool same_report(const SolveReport& a, const SolveReport& b) {
    if (a.strategy != b.strategy || a.converged != b.converged || a.iterations != b.iterations ||
        !same_real(a.final_norm, b.final_norm) ||
        !same_real(a.verification_error, b.verification_error) ||
        a.history.size() != b.history.size() || a.drift.size() != b.drift.size() ||
        a.phase_times.size() != b.phase_times.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        if (!same_real(a.history[i], b.history[i])) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.drift.size(); ++i) {
        if (a.drift[i].iteration != b.drift[i].iteration ||
            !same_real(a.drift[i].relative_gap, b.drift[i].relative_gap)) {
            return false;
        }
    }
    auto ia = a.phase_times.begin();
    for (auto ib = b.phase_times.begin(); ib != b.phase_times.end(); ++ia, ++ib) {
        if (ia->first != ib->first || !same_real(ia->second, ib->second)) {
            return false;
        }
    }
    return true;
}

bool same_profile(const DeviceProfile& a, const DeviceProfile& b) {
    return same_real(a.t_host, b.t_host) && same_real(a.t_accel, b.t_accel) &&
           same_real(a.s_host, b.s_host) && same_real(a.s_accel, b.s_accel) &&
           same_real(a.r_host, b.r_host) && same_real(a.r_accel, b.r_accel) &&
           a.profiled_nnz == b.profiled_nnz && a.degenerate == b.degenerate && a.pinned == b.pinned;
}

}  // namespace

json to_json(const DeviceProfile& p) {
    return {{"t_host", real(p.t_host)},     {"t_accel", real(p.t_accel)},
            {"s_host", real(p.s_host)},     {"s_accel", real(p.s_accel)},
            {"r_host", real(p.r_host)},     {"r_accel", real(p.r_accel)},
            {"profiled_nnz", p.profiled_nnz}, {"degenerate", p.degenerate},
            {"pinned", p.pinned}};
}

DeviceProfile profile_from_json(const json& j) {
    DeviceProfile p;
    p.t_host = real_of(j.at("t_host"));
    p.t_accel = real_of(j.at("t_accel"));
    p.s_host = real_of(j.at("s_host"));
    p.s_accel = real_of(j.at("s_accel"));
    p.r_host = real_of(j.at("r_host"));
    p.r_accel = real_of(j.at("r_accel"));
    p.profiled_nnz = j.at("profiled_nnz").get<std::size_t>();
    p.degenerate = j.at("degenerate").get<bool>();
    p.pinned = j.at("pinned").get<bool>();
    return p;
}

json to_json(const PartitionSummary& s) {
    return {{"n_host_rows", s.n_host_rows}, {"n_accel_rows", s.n_accel_rows},
            {"nnz1_host", s.nnz1_host},     {"nnz2_host", s.nnz2_host},
            {"nnz1_accel", s.nnz1_accel},   {"nnz2_accel", s.nnz2_accel}};
}

PartitionSummary partition_from_json(const json& j) {
    return {j.at("n_host_rows").get<std::size_t>(), j.at("n_accel_rows").get<std::size_t>(),
            j.at("nnz1_host").get<std::size_t>(),   j.at("nnz2_host").get<std::size_t>(),
            j.at("nnz1_accel").get<std::size_t>(),  j.at("nnz2_accel").get<std::size_t>()};
}

json to_json(const RunRecord& r) {
    return {
        {"problem", r.problem},
        {"n", r.n},
        {"nnz", r.nnz},
        {"strategy", r.strategy},
        {"tolerance", real(r.tolerance)},
        {"max_iterations", r.max_iterations},
        {"report", to_json(r.report)},
        {"transfers",
         {{"iteration_values", r.transfers.iteration_values},
          {"iteration_copies", r.transfers.iteration_copies},
          {"setup_values", r.transfers.setup_values},
          {"setup_copies", r.transfers.setup_copies}}},
        {"devices",
         {{"host", to_json(r.devices.host)},
          {"accel", to_json(r.devices.accel)},
          {"channel",
           {{"latency_ns", r.devices.channel.latency.count()},
            {"bandwidth_bytes_per_s", r.devices.channel.bandwidth}}}}},
        {"profile", r.profile ? to_json(*r.profile) : json(nullptr)},
        {"partition", r.partition ? to_json(*r.partition) : json(nullptr)},
        {"timestamp", r.timestamp},
        {"error", r.error ? json(*r.error) : json(nullptr)},
    };
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    r.problem = j.at("problem").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.nnz = j.at("nnz").get<std::size_t>();
    r.strategy = j.at("strategy").get<std::string>();
    r.tolerance = real_of(j.at("tolerance"));
    r.max_iterations = j.at("max_iterations").get<std::size_t>();
    r.report = report_from_json(j.at("report"));
    const auto& t = j.at("transfers");
    r.transfers = {t.at("iteration_values").get<std::size_t>(), t.at("iteration_copies").get<std::size_t>(),
                   t.at("setup_values").get<std::size_t>(), t.at("setup_copies").get<std::size_t>()};
    const auto& d = j.at("devices");
    r.devices.host = device_from_json(d.at("host"));
    r.devices.accel = device_from_json(d.at("accel"));
    r.devices.channel.latency =
        std::chrono::nanoseconds(d.at("channel").at("latency_ns").get<std::int64_t>());
    r.devices.channel.bandwidth = d.at("channel").at("bandwidth_bytes_per_s").get<double>();
    if (!j.at("profile").is_null()) {
        r.profile = profile_from_json(j.at("profile"));
    }
    if (!j.at("partition").is_null()) {
        r.partition = partition_from_json(j.at("partition"));
    }
    r.timestamp = j.at("timestamp").get<std::string>();
    if (!j.at("error").is_null()) {
        r.error = j.at("error").get<std::string>();
    }
    return r;
}

bool same_record(const RunRecord& a, const RunRecord& b) {
    if (a.profile.has_value() != b.profile.has_value() ||
        (a.profile && !same_profile(*a.profile, *b.profile))) {
        return false;
    }
    return a.problem == b.problem && a.n == b.n && a.nnz == b.nnz && a.strategy == b.strategy &&
           same_real(a.tolerance, b.tolerance) && a.max_iterations == b.max_iterations &&
           same_report(a.report, b.report) && a.transfers == b.transfers && a.devices == b.devices &&
           a.partition == b.partition && a.timestamp == b.timestamp && a.error == b.error;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace hybridcg::bench
