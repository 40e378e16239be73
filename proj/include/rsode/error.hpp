#pragma once

#include <stdexcept>
#include <string>

namespace rsode {

/// Invalid problem description, configuration value or call precondition.
class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operation not defined for this object (e.g. density of a discrete law).
class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Numerical failure: non-finite values, negative variance, all samples degenerate.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluation grid does not hold enough of the probability mass.
class GridCoverageError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Symbolic expansion exceeded its term budget.
class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Not enough usable points for a fit.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rsode
