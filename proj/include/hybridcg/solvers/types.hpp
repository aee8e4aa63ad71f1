#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "hybridcg/sparse/csr_matrix.hpp"
#include "hybridcg/sparse/kernels.hpp"

namespace hybridcg {

struct SolverConfig {
    /// Absolute bound on the preconditioned residual norm sqrt((u,u)).
    double tolerance = 1e-5;
    std::size_t max_iterations = 10000;
    bool record_history = false;
    /// Every k-th iteration records ||b - Ax - r|| / ||b||; 0 disables.
    std::size_t drift_check_interval = 0;

    void validate() const;
};

struct DriftSample {
    std::size_t iteration;
    double relative_gap;

    friend bool operator==(const DriftSample&, const DriftSample&) = default;
};

struct SolveReport {
    std::string strategy;
    bool converged = false;
    std::size_t iterations = 0;
    double final_norm = std::numeric_limits<double>::quiet_NaN();
    /// norm_0 .. norm_iterations when SolverConfig::record_history is set.
    std::vector<double> history;
    std::vector<DriftSample> drift;
    /// Wall seconds per named phase ("setup", "iterate", device busy times, ...).
    std::map<std::string, double> phase_times;
    /// ||x - x_true||_inf when a known solution is supplied, NaN otherwise.
    double verification_error = std::numeric_limits<double>::quiet_NaN();
};

struct SolveResult {
    Vector x;
    SolveReport report;
};

/// The ten vectors and the scalars carried between pipelined-CG iterations.
struct PipecgState {
    Vector x, r, u, w, m, n, z, q, s, p;
    double gamma = 0.0;
    double gamma_prev = 0.0;
    double delta = 0.0;
    double alpha = 0.0;
    double alpha_prev = 0.0;
    double beta = 0.0;
    double norm = 0.0;
    std::size_t iteration = 0;

    PipecgSpans spans() {
        return {x, r, u, w, m, n, z, q, s, p};
    }
};

}  // namespace hybridcg
