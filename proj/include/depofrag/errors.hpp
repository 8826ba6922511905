#pragma once

#include <stdexcept>
#include <string>

namespace depofrag {

/// Thrown when an algorithm fails for numerical reasons (non-convergence,
/// singular systems, truncation budgets exceeded). Input-contract violations
/// throw std::invalid_argument instead.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File/stream level failures.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace depofrag
