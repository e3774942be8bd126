#pragma once

#include <stdexcept>
#include <string>

namespace wgm {

/// Precondition violation: input outside the model's documented domain.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Numerical failure (root bracketing, non-convergence). Carries a diagnostic.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration / file-format problem. Message includes field or line context.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wgm
