// Error types shared across the simulator.
#pragma once

#include <stdexcept>
#include <string>

namespace crosslayer {

// Bad scenario/config input (unknown key, out-of-range value, missing file).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed serialized data (trace files, config syntax).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Semantically invalid values fed to a module at runtime.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace crosslayer
