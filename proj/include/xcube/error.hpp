#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace xcube {

/// Base class for every error the engine reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

/// Query or search-expression syntax error; `position` is a byte offset into the input.
class InvalidQueryError : public Error {
public:
    InvalidQueryError(const std::string& what, std::size_t position = 0)
        : Error(what + " (at offset " + std::to_string(position) + ")"), message_(what), position_(position) {}

    std::size_t position() const noexcept { return position_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string message_;
    std::size_t position_;
};

class InvalidSelectionError : public Error {
public:
    using Error::Error;
};

/// Raised when an operation is requested out of order (explore -> refine -> materialize -> cube).
class StateError : public Error {
public:
    using Error::Error;
};

class PlanningError : public Error {
public:
    using Error::Error;
};

/// Key verification failure. `first`/`second` are the colliding (or offending) node ids.
class KeyViolationError : public Error {
public:
    KeyViolationError(const std::string& what, std::string first, std::string second = {})
        : Error(what), first_(std::move(first)), second_(std::move(second)) {}

    const std::string& first() const noexcept { return first_; }
    const std::string& second() const noexcept { return second_; }

private:
    std::string first_;
    std::string second_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Broken internal invariant; tests treat these as unreachable.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace xcube
