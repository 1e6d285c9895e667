#pragma once

#include <stdexcept>
#include <string>

namespace menisim {

/// Contract violation in user-facing input (config, mesh files, CLI args).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Failure inside a solver (singular matrix, Newton divergence, breakdown).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& message) {
    if (!cond) throw InputError(message);
}

} // namespace menisim
