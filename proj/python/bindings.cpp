#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hybridcg/bench/commands.hpp"
#include "hybridcg/bench/problem.hpp"
#include "hybridcg/bench/run_record.hpp"
#include "hybridcg/errors.hpp"
#include "hybridcg/hetero/hybrid.hpp"
#include "hybridcg/solvers/solvers.hpp"
#include "hybridcg/sparse/kernels.hpp"
#include "hybridcg/sparse/matrix_market.hpp"
#include "hybridcg/sparse/poisson.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace hybridcg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IndexArray = py::array_t<std::size_t, py::array::c_style | py::array::forcecast>;

template <typename T>
py::array_t<T> to_numpy(std::span<const T> data) {
    py::array_t<T> out(static_cast<py::ssize_t>(data.size()));
    std::copy(data.begin(), data.end(), out.mutable_data());
    return out;
}

template <typename T>
std::span<const T> view(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) {
        throw py::value_error("expected a one-dimensional array");
    }
    return {a.data(), static_cast<std::size_t>(a.size())};
}

bench::CliOptions options(double tol, std::size_t max_iters, std::optional<double> pin_ratio,
                          std::size_t host_workers, std::size_t accel_workers, double accel_throttle,
                          std::size_t latency_us, double bandwidth_mbps, bool history) {
    bench::CliOptions o;
    o.problem.tolerance = tol;
    o.problem.max_iterations = max_iters;
    o.pin_ratio = pin_ratio;
    o.host_workers = host_workers;
    o.accel_workers = accel_workers;
    o.accel_throttle = accel_throttle;
    o.xfer_latency_us = latency_us;
    o.xfer_bandwidth_mbps = bandwidth_mbps;
    o.history = history;
    return o;
}

py::object json_to_python(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

py::tuple solve_system(const CsrMatrix& a, const Array& b, std::optional<Array> x0, const std::string& strategy,
                       double tol, std::size_t max_iters, std::optional<double> pin_ratio, bool history) {
    if (!bench::is_strategy(strategy)) {
        throw py::value_error("unknown strategy '" + strategy + "'");
    }
    const auto rhs = view(b);
    Vector start(a.n_rows(), 0.0);
    if (x0) {
        const auto s = view(*x0);
        start.assign(s.begin(), s.end());
    }
    const auto pc = jacobi_setup(a);
    SolverConfig cfg;
    cfg.tolerance = tol;
    cfg.max_iterations = max_iters;
    cfg.record_history = history;

    bench::RunRecord rec;
    rec.strategy = strategy;
    Vector x;
    {
        py::gil_scoped_release release;
        if (strategy == "pcg" || strategy == "pipecg") {
            auto res = strategy == "pcg" ? pcg_solve(a, rhs, start, pc, cfg) : pipecg_solve(a, rhs, start, pc, cfg);
            x = std::move(res.x);
            rec.report = std::move(res.report);
        } else {
            DevicePair devices({}, {});
            HybridResult res;
            if (strategy == "hybrid3") {
                ChannelPair channels;
                Hybrid3Options opts;
                opts.pinned_r_host = pin_ratio;
                res = hybrid3_solve(a, rhs, start, pc, cfg, devices, channels, opts);
            } else {
                TransferChannel channel;
                res = strategy == "hybrid1" ? hybrid1_solve(a, rhs, start, pc, cfg, devices, channel)
                                            : hybrid2_solve(a, rhs, start, pc, cfg, devices, channel);
            }
            x = std::move(res.x);
            rec.report = std::move(res.report);
            rec.transfers = res.transfers;
        }
    }
    auto j = bench::to_json(rec);
    auto report = j["report"];
    report["transfers"] = j["transfers"];
    return py::make_tuple(to_numpy<double>(x), json_to_python(report));
}

py::object run_problem(const CsrMatrix& a, const std::string& id, const std::string& strategy, double tol,
                       std::size_t max_iters, std::optional<double> pin_ratio, std::size_t host_workers,
                       std::size_t accel_workers, double accel_throttle, std::size_t latency_us,
                       double bandwidth_mbps, bool history) {
    auto o = options(tol, max_iters, pin_ratio, host_workers, accel_workers, accel_throttle, latency_us,
                     bandwidth_mbps, history);
    const auto problem = bench::build_problem(id, a);
    bench::RunRecord rec;
    {
        py::gil_scoped_release release;
        rec = bench::run_strategy(problem, strategy, o);
    }
    return json_to_python(bench::to_json(rec));
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
        py::gil_scoped_release release;
        code = bench::run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hybrid pipelined conjugate gradient on emulated host/accelerator pairs";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<SetupError>(m, "SetupError", PyExc_ValueError);
    py::register_exception<BreakdownError>(m, "BreakdownError", PyExc_ArithmeticError);
    py::register_exception<CapacityError>(m, "CapacityError", PyExc_MemoryError);
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);

    py::class_<CsrMatrix>(m, "CsrMatrix")
        .def(py::init([](std::size_t n_rows, std::size_t n_cols, const IndexArray& rows, const IndexArray& cols,
                         const Array& values) {
                 return CsrMatrix::from_triplets(n_rows, n_cols, view(rows), view(cols), view(values));
             }),
             "n_rows"_a, "n_cols"_a, "rows"_a, "cols"_a, "values"_a,
             "Build from (row, col, value) triplets; duplicates are summed.")
        .def_static("identity", &CsrMatrix::identity, "n"_a)
        .def_property_readonly("n_rows", &CsrMatrix::n_rows)
        .def_property_readonly("n_cols", &CsrMatrix::n_cols)
        .def_property_readonly("nnz", &CsrMatrix::nnz)
        .def_property_readonly("shape", [](const CsrMatrix& a) { return py::make_tuple(a.n_rows(), a.n_cols()); })
        .def_property_readonly("row_offsets", [](const CsrMatrix& a) { return to_numpy(a.row_offsets()); })
        .def_property_readonly("col_indices", [](const CsrMatrix& a) { return to_numpy(a.col_indices()); })
        .def_property_readonly("values", [](const CsrMatrix& a) { return to_numpy(a.values()); })
        .def("__matmul__", [](const CsrMatrix& a, const Array& x) { return to_numpy<double>(spmv(a, view(x))); })
        .def("__eq__", [](const CsrMatrix& a, const CsrMatrix& b) { return a == b; })
        .def("__repr__", [](const CsrMatrix& a) {
            return "CsrMatrix(" + std::to_string(a.n_rows()) + "x" + std::to_string(a.n_cols()) +
                   ", nnz=" + std::to_string(a.nnz()) + ")";
        });

    m.def("read_matrix_market", [](const std::string& path) { return read_matrix_market(path); }, "path"_a);
    m.def("poisson125", [](std::size_t n) { return generate_poisson125(n); }, "n"_a);
    m.def(
        "poisson125_size",
        [](std::size_t n) {
            const auto s = poisson125_size(n);
            return py::make_tuple(s.n_rows, s.nnz);
        },
        "n"_a);
    m.def("spmv", [](const CsrMatrix& a, const Array& x) { return to_numpy<double>(spmv(a, view(x))); }, "a"_a,
          "x"_a);

    m.attr("strategies") = std::vector<std::string>(std::begin(bench::kStrategies), std::end(bench::kStrategies));

    m.def("solve", &solve_system, "a"_a, "b"_a, "x0"_a = py::none(), "strategy"_a = "pipecg", "tol"_a = 1e-5,
          "max_iters"_a = 10000, "pin_ratio"_a = py::none(), "history"_a = false,
          "Solve A x = b with a Jacobi preconditioner. Returns (x, report).");
    m.def("run", &run_problem, "a"_a, "id"_a = "matrix", "strategy"_a = "pipecg", "tol"_a = 1e-5,
          "max_iters"_a = 10000, "pin_ratio"_a = py::none(), "host_workers"_a = 1, "accel_workers"_a = 1,
          "accel_throttle"_a = 1.0, "latency_us"_a = 0, "bandwidth_mbps"_a = 0.0, "history"_a = false,
          "Run one strategy on the manufactured system for A and return the run record.");
    m.def("run_cli", &run_cli, "args"_a, "Run the command-line driver. Returns (exit_code, stdout, stderr).");
}
