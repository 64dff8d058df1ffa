#pragma once

#include <stdexcept>
#include <string>

namespace pqlab {

/// Raised when an input violates a documented precondition.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces non-finite values or cannot proceed.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace pqlab
