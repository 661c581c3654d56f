#pragma once

#include <stdexcept>
#include <string>

namespace oesr {

/// Integrator failure raised by spin-core evolution.
class SolverError : public std::runtime_error {
public:
    enum class Kind { step_underflow, positivity_violation, non_finite };

    SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Input outside the parameter regime an operation supports (e.g. the
/// overdamped branch of the closed-form Rabi solution).
class UnsupportedRegime : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Numerical sampling too coarse for the requested evaluation.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-point iteration produced a non-finite iterate.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace oesr
