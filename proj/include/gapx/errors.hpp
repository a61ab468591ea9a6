#pragma once

#include <stdexcept>
#include <string>

namespace gapx {

// Bad user input: malformed config, invalid parameters, inconsistent target data.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Requested resolution would exceed a configured resource cap (net size).
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// A quantitative guarantee of the construction failed at runtime.
// Indicates a bug in the pipeline, not a data condition.
class InvariantViolation : public std::logic_error {
public:
    explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace gapx
