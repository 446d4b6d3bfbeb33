#pragma once

#include <stdexcept>
#include <string>

namespace clickbait {

// Failure families map onto CLI exit codes: usage 1, data 2, numeric 3.
enum class ErrorKind { usage = 1, data = 2, numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

/// Bad parameter or out-of-order invocation.
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Unreadable, malformed or empty input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Undefined score, diverged training, degenerate geometry.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

/// Same failure family, new message.
[[noreturn]] inline void throw_as(ErrorKind kind, const std::string& what) {
    switch (kind) {
    case ErrorKind::usage: throw ParameterError(what);
    case ErrorKind::data: throw DataError(what);
    case ErrorKind::numeric: throw NumericError(what);
    }
    throw Error(kind, what);
}

} // namespace clickbait
