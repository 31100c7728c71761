#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stoctot {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// malformed input file; byte_offset is 0-based into the file
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t byte_offset)
        : Error(msg), byte_offset(byte_offset) {}
    std::size_t byte_offset;
};

// structurally valid input that violates the expected schema
struct SchemaError : Error {
    SchemaError(const std::string& msg, std::size_t record_index, std::string key)
        : Error(msg), record_index(record_index), key(std::move(key)) {}
    std::size_t record_index;
    std::string key;
};

struct BoundsError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    ConfigError(const std::string& msg, std::string field)
        : Error(msg), field(std::move(field)) {}
    std::string field;
};

struct TemplateError : Error {
    TemplateError(const std::string& msg, std::string placeholder)
        : Error(msg), placeholder(std::move(placeholder)) {}
    std::string placeholder;
};

struct TransportError : Error {
    TransportError(const std::string& msg, int attempts)
        : Error(msg), attempts(attempts) {}
    int attempts;
};

struct FixtureMissError : Error {
    FixtureMissError(const std::string& msg, std::string digest)
        : Error(msg), digest(std::move(digest)) {}
    std::string digest;
};

struct FixtureConflictError : Error {
    FixtureConflictError(const std::string& msg, std::string digest)
        : Error(msg), digest(std::move(digest)) {}
    std::string digest;
};

// no token permitted at the first decoding step
struct ConstraintExhaustedError : Error {
    using Error::Error;
};

// the reasoning run produced no leaf to select from
struct EngineFailureError : Error {
    using Error::Error;
};

} // namespace stoctot
