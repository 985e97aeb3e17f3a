#pragma once

#include <stdexcept>
#include <string>

namespace srg {

/// Frame, chart and table dimensions disagree, or the frame degenerates.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// X_i and their first brackets fail to span the tangent space at a point.
class HormanderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidIndexError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A frame word longer than the supported derivative order.
class UnsupportedOrderError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A Monte Carlo estimator ran out of usable samples.
class InsufficientSamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Spectral computations need a compact model.
class NotCompactError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IterationLimitError : public std::runtime_error {
 public:
  IterationLimitError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Malformed structure, test-function or ensemble files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace srg
