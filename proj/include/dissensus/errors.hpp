#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dissensus {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Rejected configuration: bad thresholds, disconnected start, malformed config keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A patch whose edges reference agents outside the involved set.
class InvalidPatch : public Error {
public:
    using Error::Error;
};

// Query on an input it is not defined for (e.g. classifying the empty graph).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

// A critical-event patch failed validation when it was about to be applied.
class RuleViolation : public Error {
public:
    using Error::Error;
};

// Broken internal contract: scheduler picked a non-edge, delta overshot the range.
class ProtocolFault : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace dissensus
