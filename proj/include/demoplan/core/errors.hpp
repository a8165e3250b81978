#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace demoplan {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries a 1-based line (and column when known).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        std::string out = "line " + std::to_string(line);
        if (column != 0) out += ", column " + std::to_string(column);
        return out + ": " + what;
    }

    std::size_t line_;
    std::size_t column_;
};

/// Structurally valid input that misses required declarations.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A type invariant does not hold.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The requested record does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// The operation collides with one already in progress.
class ConflictError : public Error {
public:
    using Error::Error;
};

/// A remote call failed before producing an answer; retrying may succeed.
class TransportError : public Error {
public:
    using Error::Error;
};

} // namespace demoplan
