#include "ltcar/errors.hpp"

#include <cstdio>

namespace ltcar {

const char* to_string(NumericFailure kind) {
  switch (kind) {
    case NumericFailure::kIllPosedModel: return "ill-posed-model";
    case NumericFailure::kDegenerateSpeed: return "degenerate-speed";
    case NumericFailure::kNoConvergence: return "no-convergence";
    case NumericFailure::kSingularPoint: return "singular-point";
    case NumericFailure::kRiccatiBlowUp: return "riccati-blow-up";
    case NumericFailure::kLineSearchStall: return "line-search-stall";
    case NumericFailure::kInfeasible: return "infeasible";
    case NumericFailure::kOutOfDomain: return "out-of-domain";
  }
  return "unknown";
}

NumericError::NumericError(NumericFailure kind, const std::string& what,
                           std::optional<double> time)
    : std::runtime_error([&] {
        std::string msg = std::string(to_string(kind)) + ": " + what;
        if (time) {
          char buf[64];
          std::snprintf(buf, sizeof buf, " (at t = %.6g s)", *time);
          msg += buf;
        }
        return msg;
      }()),
      kind_(kind),
      time_(time),
      detail_(what) {}

NumericError NumericError::at_time(double t) const {
  return NumericError(kind_, detail_, t);
}

}  // namespace ltcar
