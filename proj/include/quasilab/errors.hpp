#pragma once

#include <stdexcept>
#include <string>

namespace quasilab {

// Base of every error raised by the library. Callers that only need to
// distinguish "fault" from "result" catch this one.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Requested depth exceeds the materialized partial quotients.
class InsufficientPrecision : public Error {
public:
    using Error::Error;
};

// Interval comparison could not be decided at the available precision.
class ToleranceTooCoarse : public Error {
public:
    using Error::Error;
};

class FormulaRegimeViolated : public Error {
public:
    using Error::Error;
};

class SingularEvaluation : public Error {
public:
    using Error::Error;
};

class KappaBelowResolution : public Error {
public:
    using Error::Error;
};

class LevelSearchOverflow : public Error {
public:
    using Error::Error;
};

class CostGuardExceeded : public Error {
public:
    using Error::Error;
};

class MissingSamples : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace quasilab
