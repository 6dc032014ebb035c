#pragma once

#include <stdexcept>
#include <string>

namespace primfit {

struct DegenerateTaper : std::runtime_error {
    explicit DegenerateTaper(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonUnitQuaternion : std::runtime_error {
    explicit NonUnitQuaternion(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnstableField : std::runtime_error {
    explicit UnstableField(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyAssignment : std::runtime_error {
    explicit EmptyAssignment(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptySet : std::runtime_error {
    explicit EmptySet(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyUnion : std::runtime_error {
    explicit EmptyUnion(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyShape : std::runtime_error {
    explicit EmptyShape(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateTarget : std::runtime_error {
    explicit DegenerateTarget(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg, long line = -1)
        : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_number(line) {}
    long line_number;
};

struct SchemaVersionMismatch : std::runtime_error {
    explicit SchemaVersionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnknownGenerator : std::runtime_error {
    explicit UnknownGenerator(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace primfit
