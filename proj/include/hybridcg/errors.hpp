#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hybridcg {

/// Operand lengths or matrix shapes do not agree.
class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A kernel was called out of its required order (e.g. SPMV phase 2 before phase 1).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Matrix Market input could not be read. `line()` is 1-based; 0 means end of input.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Preconditioner construction failed on a specific row.
class SetupError : public std::runtime_error {
public:
    SetupError(std::size_t row, const std::string& what)
        : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// A requested object would exceed the configured memory budget.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Krylov recurrence broke down: non-positive curvature or a non-finite scalar.
class BreakdownError : public std::runtime_error {
public:
    BreakdownError(std::size_t iteration, const std::string& what)
        : std::runtime_error("breakdown at iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

}  // namespace hybridcg
