#pragma once

#include <stdexcept>
#include <string>

namespace genhedge {

// A requested derivative or operator is not available on this object.
struct capability_error : std::runtime_error {
    explicit capability_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or unsatisfiable configuration (schema violation, exhausted search, ...).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A declared numerical tolerance could not be met.
struct tolerance_error : std::runtime_error {
    explicit tolerance_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value or numeric overflow inside a computation.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A model invariant failed at runtime; message carries the witness.
struct invariant_error : std::runtime_error {
    explicit invariant_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Diagonal operator applied at an index with vanishing coefficient.
struct singular_operator_error : std::runtime_error {
    explicit singular_operator_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace genhedge
