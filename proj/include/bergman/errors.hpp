#pragma once

#include <stdexcept>
#include <string>

namespace bergman {

/// Raised when an argument lies outside the domain of an operation
/// (radius outside [0,1), invalid family parameter, vanishing weight, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an iterative numerical procedure cannot reach its tolerance.
/// Carries the best estimate obtained and the tolerance actually achieved.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double best_estimate,
               double achieved_tolerance)
      : std::runtime_error(what),
        best_estimate_(best_estimate),
        achieved_tolerance_(achieved_tolerance) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double achieved_tolerance() const noexcept { return achieved_tolerance_; }

 private:
  double best_estimate_;
  double achieved_tolerance_;
};

}  // namespace bergman
