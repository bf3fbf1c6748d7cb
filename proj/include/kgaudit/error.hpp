#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgaudit {

/// Base class of every error the toolkit raises. The CLI maps each subclass
/// to a distinct process exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 4; }
};

/// Bad flags, bad configuration values, mismatched inputs.
class UsageError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}

    std::size_t line() const noexcept { return line_; }
    int exit_code() const noexcept override { return 3; }

private:
    std::size_t line_ = 0;
};

/// Well-formed input that violates a data contract (unknown ids, bad paths).
class ValidationError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// A post-condition the toolkit guarantees did not hold. Always a bug.
class InvariantError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

}  // namespace kgaudit
