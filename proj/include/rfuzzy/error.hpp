#pragma once

#include <stdexcept>
#include <string>

namespace rfuzzy {

// Each family maps onto one CLI exit code (see experiment.hpp).

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed model, rule base or membership parameters.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Bad input data: unreadable files, schema mismatches, too few rows.
class DataError : public Error {
public:
    using Error::Error;
};

/// Ill-posed numerical problem (rank deficiency, degenerate baseline).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Inference produced no output because no rule fired.
class NoRuleFiredError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace rfuzzy
