#pragma once

#include <stdexcept>
#include <string>

namespace mcgl {

// Base class; exit_code() is what the command-line front end returns.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const { return 1; }
};

// The potential violates the double-well hypotheses.
class HypothesisError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 2; }
};

// Parameters outside the domain where the construction makes sense
// (sigma outside the spinodal range, eps too large, r outside the window, ...).
class DomainError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 3; }
};

// No sign change over the supplied bracket.
class BracketError : public DomainError {
public:
    using DomainError::DomainError;
};

class SolverError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 4; }
};

class StiffnessError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 5; }
};

}  // namespace mcgl
