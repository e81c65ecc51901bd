#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace ltcar {

/// Failure classes raised by the numerical core. The CLI maps all of them to
/// exit code 3.
enum class NumericFailure {
  kIllPosedModel,    // wheelie/stoppie or singular constrained mass matrix
  kDegenerateSpeed,  // longitudinal speed below the slip floor
  kNoConvergence,    // Newton-type iteration exhausted its budget
  kSingularPoint,    // continuation hit a rank-deficient Jacobian
  kRiccatiBlowUp,
  kLineSearchStall,
  kInfeasible,       // no equilibrium for the requested (v, a_lat)
  kOutOfDomain,      // input left the model's domain (kappa <= -1, NaN)
};

const char* to_string(NumericFailure kind);

class NumericError : public std::runtime_error {
 public:
  NumericError(NumericFailure kind, const std::string& what,
               std::optional<double> time = std::nullopt);

  NumericFailure kind() const { return kind_; }
  /// Simulation time at which the failure occurred, when it happened inside a
  /// time integration.
  std::optional<double> time() const { return time_; }
  /// The message without the failure-kind prefix and time suffix.
  const std::string& detail() const { return detail_; }

  NumericError at_time(double t) const;

 private:
  NumericFailure kind_;
  std::optional<double> time_;
  std::string detail_;
};

/// Bad configuration: unknown names, out-of-range settings, malformed files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ltcar
