#pragma once

#include <stdexcept>
#include <string>

namespace hpol {

// Bad arguments or states outside an operation's domain.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed to converge or lost accuracy.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Descent stalled; carries the best value reached so the caller can decide.
struct NonConvergenceError : NumericError {
  NonConvergenceError(const std::string& msg, double best_value_)
      : NumericError(msg), best_value(best_value_) {}
  double best_value;
};

// Integration step rejected: energy drift before projection exceeded the bound.
struct StepSizeError : NumericError {
  using NumericError::NumericError;
};

// Orbit did not come back to the section before T_max.
struct NoReturnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Crossing too tangential to trust.
struct TransversalityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Section construction failed (no suitable component, grid too coarse, ...).
struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Case classification produced contradictory evidence.
struct ClassificationConflict : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Occupation-measure program has no feasible point at the requested slack.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hpol
