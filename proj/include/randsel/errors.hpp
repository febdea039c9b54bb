#pragma once

#include <stdexcept>
#include <string>

namespace randsel {

// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed user input: dimension mismatches, out-of-range parameters,
// unreadable or ill-formed files.
class InputError : public Error {
public:
    using Error::Error;
};

// A matrix that was required to be (semi)definite turned out singular or
// indefinite. Carries the offending minimum eigenvalue for diagnostics.
class SingularError : public Error {
public:
    SingularError(const std::string& what, double min_eigenvalue)
        : Error(what), min_eigenvalue_(min_eigenvalue) {}

    double min_eigenvalue() const { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

// The observability Gramian of the system (or subsystem) is singular.
class NotObservableError : public SingularError {
public:
    using SingularError::SingularError;
};

// An iteration did not reach its tolerance within the allowed step budget.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual, long iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}

    double residual() const { return residual_; }
    long iterations() const { return iterations_; }

private:
    double residual_;
    long iterations_;
};

}  // namespace randsel
