// errors.hpp: Error categories shared by the library and the CLI

#pragma once

#include <stdexcept>
#include <string>

namespace gcl {

enum class ErrorKind {
    InvalidDimension,
    DimensionMismatch,
    UnsupportedDrive,
    Consistency,    // parameter combination forbidden by the model (e.g. Lindblad off θ=π/4)
    StepSize,       // trace drift not cured by step doubling
    Instability,    // non-finite values during integration
    NonConvergence,
    Ambiguity,      // degenerate fixed point of the one-period map
    NoTemperature,  // populations do not decay with energy
    EmptyBranch,
    Config,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Config errors carry the dotted key path they refer to ("model.theta").
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(ErrorKind::Config, key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

const char* to_string(ErrorKind kind) noexcept;

} // namespace gcl
