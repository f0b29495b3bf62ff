#pragma once

#include <stdexcept>
#include <string>

namespace kic {

// Base for every failure raised by the library. The CLI maps these onto
// exit codes; callers that only care about "something went wrong" can catch
// this type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class MissingInputError : public Error {
public:
    using Error::Error;
};

// Malformed text input (CSV files, observable expressions). Carries the
// 1-based line number when one applies, 0 otherwise.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SpecError : public Error {
public:
    using Error::Error;
};

// A model cannot rebuild its lifted input from its own outputs.
class ClosureError : public Error {
public:
    using Error::Error;
};

class EstimatorError : public Error {
public:
    using Error::Error;
};

class LoadError : public Error {
public:
    using Error::Error;
};

// A parameter outside its documented domain (negative variance, dt <= 0, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

}  // namespace kic
