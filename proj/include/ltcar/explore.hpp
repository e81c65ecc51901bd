#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ltcar/errors.hpp"
#include "ltcar/manifold.hpp"
#include "ltcar/track.hpp"
#include "ltcar/trajopt.hpp"

namespace ltcar::explore {

using trajopt::Curve;
using trajopt::Trajectory;

/// A desired curve plus what the exploration needs to carry a solution from
/// one family member to the next.
struct DesiredCurve {
  double parameter = 0.0;  // continuation parameter (aggressiveness or speed)
  Curve curve;
  /// Path arclength at each sample; empty for curves without a path.
  std::vector<double> s;
  tire::TireModel tire_model = tire::TireModel::kPacejka;
};

struct QuasiStaticOptions {
  manifold::LoadModel loads = manifold::LoadModel::kLoadTransfer;
  manifold::PointSolveOptions solve;
};

/// Equilibrium state and input at every path sample: (v_d, a_lat = v_d^2
/// sigma_d) solved by solve_point warm-started from the previous sample,
/// heading psi = path heading - beta. Under tire model `mode` the car's own
/// model is replaced. Throws NumericError(kInfeasible) with the first
/// failing time.
DesiredCurve quasi_static(const PathSpec& path, const SpeedProfile& profile,
                          const CarModel& car, double dt,
                          tire::TireModel mode,
                          const QuasiStaticOptions& opt = {});

/// Pacejka design, falling back to linear tires when a sample is infeasible.
DesiredCurve quasi_static_with_fallback(const PathSpec& path,
                                        const SpeedProfile& profile,
                                        const CarModel& car, double dt,
                                        const QuasiStaticOptions& opt = {});

using CurveBuilder = std::function<DesiredCurve(double)>;

/// One curve per schedule value, in schedule order, built on up to `threads`
/// threads. Builder failures are rethrown with the parameter value.
std::vector<DesiredCurve> morph_family(const CurveBuilder& builder,
                                       const std::vector<double>& schedule,
                                       int threads = 1);

/// 0.5, 0.6, ..., 1.0.
std::vector<double> aggressiveness_schedule();
/// from, from + step, ..., to.
std::vector<double> speed_schedule(double from = 25.0, double to = 30.0,
                                   double step = 1.0);

/// Chicane family member: the chicane speed profile with its deviation from
/// the mean scaled by `aggressiveness`.
CurveBuilder chicane_builder(const CarModel& car, double dt,
                             const QuasiStaticOptions& opt = {});
/// Loop family member at constant speed `v`.
CurveBuilder loop_builder(const CarModel& car, double dt,
                          const QuasiStaticOptions& opt = {});

/// Warm start for the next family member: the previous optimum sampled at
/// equal path arclength (or equal time fraction when no arclength is
/// recorded), with its velocities rescaled to the next desired pace. The
/// first state is the next desired curve's.
Curve retime(const Trajectory& prev_opt, const DesiredCurve& prev_desired,
             const DesiredCurve& next_desired);

/// The previous optimum on the next grid at equal time, held at its last
/// sample past its own horizon.
Curve carry_in_time(const Trajectory& prev_opt, const DesiredCurve& next_desired);

struct Leg {
  double parameter = 0.0;
  double projection_cost = 0.0;  // cost of the leg's initial trajectory
  trajopt::NewtonResult result;
};

struct ExploreResult {
  std::vector<Leg> legs;
  /// Set when a leg failed; completed legs are kept.
  std::optional<NumericError> failure;
  std::optional<double> failed_parameter;

  bool complete() const { return !failure.has_value(); }
};

/// Continuation over the family: leg 1 starts from the projection of the
/// first desired curve, each later leg from the projection of the retimed
/// previous optimum, or of the optimum carried over in time when the
/// retimed curve cannot be tracked.
ExploreResult explore(const std::vector<DesiredCurve>& family,
                      const trajopt::Weights& w, const trajopt::Plant& plant,
                      const trajopt::NewtonOptions& opt = {});

/// Inertial acceleration component normal to the velocity, with the sign of
/// a positive yaw rate; on an equilibrium this is v^2 times the path
/// curvature.
double lateral_acceleration(const trajopt::Plant& plant, const Vec6& x,
                            const Vec3& u);

/// Weights for the built-in tracks: rear slip only (front slip held at
/// zero) and regulator input weight R_K = I. With the default R_K the
/// projection cannot hold the car near the grip limit in the tight loop turn.
trajopt::Weights synthetic_scenario_weights();

/// Weights for curves from an external simulator, whose inputs carry no
/// information: input weight 1e-3 identity.
trajopt::Weights external_curve_weights();

/// Reads a trajectory CSV (see io), fills missing input columns with zeros
/// and resamples linearly onto a grid of step dt starting at the first time.
DesiredCurve load_external_curve(const std::string& path, double dt);

}  // namespace ltcar::explore
