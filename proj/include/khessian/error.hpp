#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace khessian
{
    /// Base of every error thrown by the library.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Malformed expression text. `offset` is the 0-based character position.
    class ParseError : public Error
    {
    public:
        ParseError(const std::string &what, std::size_t offset)
            : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

        std::size_t offset() const noexcept { return offset_; }

    private:
        std::size_t offset_;
    };

    /// An expression was evaluated outside its domain (log of a non-positive number, 0^-1, ...).
    class DomainError : public Error
    {
    public:
        using Error::Error;
    };

    /// A finite computation produced an infinite result.
    class OverflowError : public DomainError
    {
    public:
        using DomainError::DomainError;
    };

    /// A problem or configuration violates a documented precondition.
    class SpecError : public Error
    {
    public:
        using Error::Error;
    };

    /// Numerical failure: non-finite integrand, unreachable tolerance, ...
    class NumericalError : public Error
    {
    public:
        using Error::Error;
    };
}
