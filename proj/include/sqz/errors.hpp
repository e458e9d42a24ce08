#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sqz
{

// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// A parameter lies outside the domain where the model is defined.
class DomainError : public Error
{
public:
    using Error::Error;
};

// Pump power at or above the oscillation threshold; the below-threshold model does not apply.
class AboveThresholdError : public DomainError
{
public:
    using DomainError::DomainError;
};

// Caller supplied an unusable argument (too few samples, empty list, ...).
class ArgumentError : public Error
{
public:
    using Error::Error;
};

// Malformed config or trace text. line() is 1-based, 0 when the problem is not tied to a line.
class ParseError : public Error
{
public:
    ParseError(std::size_t line, std::string key, const std::string &message)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message)
        , line_(line)
        , key_(std::move(key))
    {
    }

    std::size_t line() const noexcept { return line_; }
    const std::string &key() const noexcept { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

} // namespace sqz
