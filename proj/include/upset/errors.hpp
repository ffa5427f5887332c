#pragma once

#include <stdexcept>
#include <string>

namespace upset {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input violates a documented precondition or size cap.
struct ScaleCapError : Error {
    using Error::Error;
};

// A component broke one of its own contracts (e.g. an oracle returned a
// perturbation whose error pattern was already known).
struct ContractViolationError : Error {
    using Error::Error;
};

// The learner's version space emptied or the pass cap was hit: no hypothesis
// in the class is robustly consistent with the input sequence.
struct NonRealizableError : Error {
    using Error::Error;
};

struct BoostFailureError : Error {
    using Error::Error;
};

struct SparsifyFailureError : Error {
    using Error::Error;
};

struct ConfidenceBoostFailureError : Error {
    using Error::Error;
};

struct SurvivorFailureError : Error {
    using Error::Error;
};

struct NonTerminatingError : Error {
    using Error::Error;
};

}  // namespace upset
