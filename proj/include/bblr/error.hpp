#pragma once

#include <stdexcept>
#include <string>

namespace bblr {

// Base for all library errors. Callers that only care about "something went
// wrong in the learner/filter stack" can catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// State outside the configured evaluation box.
class DomainError : public Error {
public:
    using Error::Error;
};

// Iterative routine hit its iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

// Cholesky of a precision/covariance matrix failed.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Integrator produced a non-finite state.
class BlowUpError : public Error {
public:
    using Error::Error;
};

}  // namespace bblr
