#pragma once

#include <stdexcept>
#include <string>

namespace cvxwave {

/// Invalid configuration or precondition (bad N, T1, grid shape, flags).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: CFL violation, non-finite values, optimizer stall.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A node left the feasible set (amplitude below the floor).
class InfeasibleError : public NumericalError {
public:
  InfeasibleError(const std::string& what, std::size_t node)
    : NumericalError(what), node_(node) {}

  std::size_t node() const noexcept { return node_; }

private:
  std::size_t node_;
};

/// Required input file or directory is missing or unreadable.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace cvxwave
