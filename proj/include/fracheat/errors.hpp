#pragma once

#include <stdexcept>
#include <string>

namespace fracheat {

/// Invalid configuration or construction input (caught before any numerics run).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Argument outside an operation's mathematical domain.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine failed to reach its accuracy contract; never a silent wrong value.
class EvalError : public std::runtime_error {
public:
    explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

/// A requested region is not covered by the available radial grid.
class CoverageError : public std::runtime_error {
public:
    explicit CoverageError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fracheat
