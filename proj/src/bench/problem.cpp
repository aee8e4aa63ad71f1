#include "hybridcg/bench/problem.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "hybridcg/sparse/kernels.hpp"
#include "hybridcg/sparse/matrix_market.hpp"
#include "hybridcg/sparse/poisson.hpp"

namespace hybridcg::bench {

void ProblemSpec::validate() const {
    if (matrix_path.has_value() == poisson_n.has_value()) {
        throw std::invalid_argument("exactly one of a matrix file or a Poisson size is required");
    }
    if (!(tolerance > 0.0)) {
        throw std::invalid_argument("tolerance must be positive");
    }
    if (max_iterations < 1) {
        throw std::invalid_argument("max_iterations must be at least 1");
    }
}

std::string ProblemSpec::id() const {
    if (poisson_n) {
        return "poisson-" + std::to_string(*poisson_n);
    }
    return matrix_path ? std::filesystem::path(*matrix_path).stem().string() : std::string{};
}

Problem build_problem(const ProblemSpec& spec) {
    spec.validate();
    CsrMatrix a = spec.poisson_n ? generate_poisson125(*spec.poisson_n)
                                 : read_matrix_market(*spec.matrix_path);
    return build_problem(spec.id(), std::move(a));
}

Problem build_problem(std::string id, CsrMatrix a) {
    a.require_solver_ready();
    Problem p;
    p.id = std::move(id);
    const auto n = a.n_rows();
    p.x_true.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));
    p.b = spmv(a, p.x_true);
    p.x0.assign(n, 0.0);
    p.pc = jacobi_setup(a);
    p.a = std::move(a);
    return p;
}

}  // namespace hybridcg::bench
