#pragma once

#include <stdexcept>
#include <string>

namespace clab {

// Operation not defined for the given boundary mode (e.g. shifting an open window).
struct unsupported_operation : std::logic_error {
    explicit unsupported_operation(const std::string& what) : std::logic_error(what) {}
};

// An internal invariant broke (rule proposed |v| > V, registry out of sync, ...).
// The CLI maps this to exit code 2.
struct invariant_violation : std::logic_error {
    explicit invariant_violation(const std::string& what) : std::logic_error(what) {}
};

// Bad user input (config keys, matrix files). The CLI maps this to exit code 1.
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace clab
