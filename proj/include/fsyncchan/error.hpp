#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fsc {

// Base for every recoverable failure raised by the library. Precondition
// violations use std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what, const std::string& file = {})
        : Error((file.empty() ? "line " : file + ":") + std::to_string(line) + ": " + what),
          line_(line),
          detail_(what) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

// A failing syscall. The channel never turns a failed fsync into a latency.
class ProbeError : public Error {
public:
    ProbeError(const std::string& op, int os_error);

    int os_error() const noexcept { return os_error_; }

private:
    int os_error_;
};

}  // namespace fsc
