#pragma once

#include <stdexcept>
#include <string>

namespace msl {

// Invalid configuration or parameter domain (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during a computation (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// All particle weights collapsed to zero at some step.
class FilterDegeneracyError : public NumericError {
public:
    FilterDegeneracyError(const std::string& msg, int step)
        : NumericError(msg), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

}  // namespace msl
