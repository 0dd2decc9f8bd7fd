#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace llb {

// Base class for all domain errors raised by the toolkit. The CLI maps
// these to exit code 1; argument-parsing problems exit with 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// Geometry, bit depth, or file-layout mismatch.
class FormatError : public Error {
public:
    using Error::Error;
};

// Index or bounds violation.
class RangeError : public Error {
public:
    using Error::Error;
};

// Invalid user-supplied configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Degenerate or otherwise unusable numeric input.
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// External command failed; carries the exit status and captured log.
class ProcessError : public Error {
public:
    ProcessError(const std::string& what_arg, int exit_code, std::string log)
        : Error(what_arg), exit_code_(exit_code), log_(std::move(log)) {}

    int exit_code() const { return exit_code_; }
    const std::string& log() const { return log_; }

private:
    int exit_code_;
    std::string log_;
};

}  // namespace llb
