#pragma once

#include <stdexcept>
#include <string>

namespace cqed {

// Input outside the mathematical domain of an operation (zero linewidth,
// non-positive linear power, all-zero field, ...). The CLI maps it to exit 1.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed input files or invalid invocation. The CLI maps it to exit 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The adaptive integrator could not meet its tolerance within the step budget.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double last_good_time)
        : std::runtime_error(what), last_good_time_(last_good_time) {}

    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

// Normal matrix of a least-squares problem is singular at the optimum.
class DegenerateFitError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace cqed
