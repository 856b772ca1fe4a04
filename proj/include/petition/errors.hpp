#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace petition {

/// Base for every error raised by the library. The CLI maps the two
/// families below onto exit codes 1 (validation) and 2 (numeric).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data, malformed files, misuse of an API (exit code 1).
class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public ValidationError {
public:
    ParseError(const std::string &source, std::size_t line, const std::string &what)
        : ValidationError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Wrong field count / dimension inside an otherwise parseable file.
class FormatError : public ParseError {
public:
    using ParseError::ParseError;
};

class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Object used before it was fitted / prepared.
class StateError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Numerical failure: factorization breakdown, non-finite values (exit code 2).
class NumericError : public Error {
public:
    using Error::Error;
};

class TrainingError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace petition
