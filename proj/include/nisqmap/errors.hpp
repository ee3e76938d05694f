#pragma once

#include <stdexcept>
#include <string>

namespace nisqmap {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& m) : std::runtime_error("shape error: " + m) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& m) : std::runtime_error("numeric error: " + m) {}
};

struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& m) : std::runtime_error("contract violation: " + m) {}
};

struct StateError : std::runtime_error {
    explicit StateError(const std::string& m) : std::runtime_error("state error: " + m) {}
};

struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& m) : std::runtime_error("capacity error: " + m) {}
};

struct NotReadyError : std::runtime_error {
    explicit NotReadyError(const std::string& m) : std::runtime_error("not ready: " + m) {}
};

struct DegenerateSampleError : std::runtime_error {
    explicit DegenerateSampleError(const std::string& m)
        : std::runtime_error("degenerate sample: " + m) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error("config error: " + m) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& m) : std::runtime_error("io error: " + m) {}
};

}  // namespace nisqmap
