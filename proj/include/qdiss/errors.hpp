#pragma once

#include <stdexcept>
#include <string>

namespace qdiss {

// Bad input: malformed config, unknown keys, unusable parameter combinations,
// missing files. Mapped to exit code 2 by the command line driver.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A run that parsed fine but failed a physical validity check at runtime:
// diverging propagation, non-stationary steady-state window, sum rules out of
// tolerance. Mapped to exit code 1.
class PhysicsError : public std::runtime_error {
public:
    explicit PhysicsError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qdiss
