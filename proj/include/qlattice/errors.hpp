#pragma once

#include <stdexcept>
#include <string>

namespace qlattice {

// Input violates a documented precondition or invariant (CLI exit code 2).
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A work budget was exhausted before the computation finished (exit code 3).
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative procedure failed to reach its tolerance (exit code 4).
struct NonConvergence : std::runtime_error {
    explicit NonConvergence(const std::string& what, double partial = 0.0)
        : std::runtime_error(what), partial_value(partial) {}
    double partial_value;
};

}  // namespace qlattice
