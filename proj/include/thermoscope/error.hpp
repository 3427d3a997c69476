#pragma once

#include <stdexcept>
#include <string>

namespace thermoscope {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or type invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An exact computation would exceed the configured enumeration budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// Query outside the effective domain of a function (for example a rate
/// function evaluated beyond the reachable slope interval).
class DomainError : public Error {
public:
    using Error::Error;
};

} // namespace thermoscope
