#pragma once

#include <stdexcept>
#include <string>

namespace hetlb {

// Base of every error raised by the library. The CLI maps subclasses to exit
// codes: InfeasibleError and its children -> 2, everything else -> 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument or parameter outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed configuration (file or flags), e.g. non-integer kF = qF * k.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Parameter combinations for which the system has no stable operating point.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

class NoStableFixedPoint : public InfeasibleError {
public:
    using InfeasibleError::InfeasibleError;
};

// A queue that the analysis shows to be overloaded (e.g. mu - lambda_busy <= 0).
class DivergenceError : public InfeasibleError {
public:
    using InfeasibleError::InfeasibleError;
};

class DivergentTail : public InfeasibleError {
public:
    using InfeasibleError::InfeasibleError;
};

// Conditional mean on an event of probability zero (e.g. no busy servers).
class ConditionalUndefined : public Error {
public:
    using Error::Error;
};

// No grid point admits a stable fixed point. Should not happen for lambda < 1.
class AllInfeasible : public InfeasibleError {
public:
    using InfeasibleError::InfeasibleError;
};

class TruncationTooSmall : public Error {
public:
    using Error::Error;
};

class StateSpaceTooLarge : public Error {
public:
    using Error::Error;
};

}  // namespace hetlb
