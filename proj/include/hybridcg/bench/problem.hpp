#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "hybridcg/sparse/csr_matrix.hpp"
#include "hybridcg/sparse/jacobi.hpp"

namespace hybridcg::bench {

/// Where the matrix comes from plus the stopping rule. Exactly one source.
struct ProblemSpec {
    std::optional<std::string> matrix_path;
    std::optional<std::size_t> poisson_n;
    double tolerance = 1e-5;
    std::size_t max_iterations = 10000;

    void validate() const;
    /// "poisson-<n>" or the matrix file's stem.
    std::string id() const;
};

/// A manufactured system: x_true = 1/sqrt(N), b = A x_true, x0 = 0.
struct Problem {
    std::string id;
    CsrMatrix a;
    Vector b;
    Vector x_true;
    Vector x0;
    JacobiPreconditioner pc;
};

Problem build_problem(const ProblemSpec& spec);
Problem build_problem(std::string id, CsrMatrix a);

}  // namespace hybridcg::bench
