#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltcar/vehicle.hpp"

namespace ltcar::manifold {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat34 = Eigen::Matrix<double, 3, 4>;

/// Unknowns of the cornering-equilibrium system at fixed speed. The front
/// slip is held at zero (rear-wheel drive).
struct EquilibriumUnknowns {
  double a_lat = 0.0;    // lateral acceleration, normal to velocity [m/s^2]
  double beta = 0.0;     // vehicle sideslip [rad]
  double delta = 0.0;    // steer angle [rad]
  double kappa_r = 0.0;  // rear longitudinal slip

  Vec4 to_vector() const { return {a_lat, beta, delta, kappa_r}; }
  static EquilibriumUnknowns from_vector(const Vec4& x) {
    return {x[0], x[1], x[2], x[3]};
  }
};

enum class LoadModel {
  kLoadTransfer,  // LT-CAR loads
  kStatic,        // bicycle reference, loads frozen at the static split
};

/// The car plus the load model the residual uses.
struct EquilibriumSystem {
  CarModel car;
  LoadModel loads = LoadModel::kLoadTransfer;
};

/// Everything derived from one evaluation of the equilibrium equations.
struct EquilibriumDetail {
  Vec3 residual;
  NormalLoads loads;
  ContactSlips slips;
  AxleCoefficients mu;
  double psidot = 0.0;
};

struct EquilibriumPoint {
  EquilibriumUnknowns x;
  double v = 0.0;
  NormalLoads loads;
  double beta_r = 0.0;
  double beta_f = 0.0;
  double mu_rx = 0.0;
  double residual_norm = 0.0;

  /// The steady state and input this point describes, for evaluating the
  /// dynamics.
  PolarVelocity velocity() const { return {v, x.beta, x.a_lat / v}; }
  CarInput input() const { return {x.delta, x.kappa_r, 0.0}; }
};

EquilibriumDetail evaluate(const EquilibriumUnknowns& x, double v,
                           const EquilibriumSystem& sys);

/// Three equilibrium equations (longitudinal, lateral, yaw) in newtons.
/// Throws NumericError(kIllPosedModel) when an equilibrium load would be
/// non-positive.
Vec3 residual(const EquilibriumUnknowns& x, double v,
              const EquilibriumSystem& sys);

/// Central finite differences with step rel_step * max(1, |x_i|).
Mat34 jacobian(const EquilibriumUnknowns& x, double v,
               const EquilibriumSystem& sys, double rel_step = 1e-6);

/// Unit kernel vector of a rank-3 Jacobian. With prev, the sign makes the
/// inner product with prev positive; without, the first component is
/// positive. Throws NumericError(kSingularPoint) when the kernel is not
/// one-dimensional.
Vec4 tangent(const Mat34& J, const std::optional<Vec4>& prev = std::nullopt);

struct ContinuationOptions {
  double step = 0.05;  // initial predictor step, scaled units
  double nu = 1e-8;    // residual tolerance [N]
  int max_corrector_iterations = 20;
  int max_points = 2000;
  double min_step = 1e-8;
  double max_abs_delta = 1.5707963267948966;  // 90 deg
  double max_abs_kappa = 1.0;
  /// Stop once a_lat changes sign relative to the tracing direction, which
  /// means the branch has come back through zero lateral acceleration.
  bool stop_on_lateral_sign_change = true;
  /// Per-unknown scaling (a_lat, beta, delta, kappa_r) applied before
  /// measuring steps and arclength.
  Vec4 scale{10.0, 0.1, 0.1, 0.1};
  /// +1 traces towards positive a_lat from the seed, -1 the mirror image.
  int direction = 1;
};

/// Pseudoinverse Newton iteration x <- x - J^+ f in the scaled unknowns.
/// Throws NumericError(kNoConvergence) when max_iter iterations do not reach
/// ||f|| <= nu.
EquilibriumPoint newton_correct(const Vec4& alpha, double v,
                                const EquilibriumSystem& sys,
                                const ContinuationOptions& opt = {});

enum class Termination {
  kMaxPoints,
  kSingularPoint,
  kWellPosednessBoundary,
  kDeltaLimit,
  kKappaLimit,
  kLateralSignChange,
  kStepUnderflow,
};

std::string_view to_string(Termination t);

struct ManifoldBranch {
  double v = 0.0;
  int orientation = 1;
  std::vector<EquilibriumPoint> points;
  /// Unit tangents in scaled unknowns, one per point.
  std::vector<Vec4> tangents;
  /// Cumulative scaled distance from the seed.
  std::vector<double> arclength;
  Termination termination = Termination::kMaxPoints;
  /// First point after which the a_lat tangent component turns against the
  /// tracing direction.
  std::optional<std::size_t> fold_index;

  std::size_t max_lateral_index() const;
};

/// Predictor-corrector continuation from a seed that already satisfies the
/// residual tolerance. Euler predictor along the tangent, step halved on
/// corrector failure and reset after every accepted point.
ManifoldBranch trace_branch(const EquilibriumUnknowns& seed, double v,
                            const EquilibriumSystem& sys,
                            const ContinuationOptions& opt = {});

struct PointGuess {
  double beta = 0.0;
  double delta = 0.0;
  double kappa_r = 0.0;
};

struct PointSolveOptions {
  double nu = 1e-8;
  int max_iterations = 50;
  double max_abs_delta = 1.5707963267948966;
  double max_abs_kappa = 1.0;
};

/// Square Newton solve in (beta, delta, kappa_r) at fixed (v, a_lat).
/// Throws NumericError(kInfeasible) when no equilibrium is found in the
/// guess's basin.
EquilibriumPoint solve_point(double v, double a_lat, const PointGuess& guess,
                             const EquilibriumSystem& sys,
                             const PointSolveOptions& opt = {});

struct UndersteerSample {
  double a_lat;
  double k_us;  // [rad / (m/s^2)]
};

/// Ackermann steer gradient (a + b) / v^2.
double ackermann_gradient(double wheelbase, double v);

/// K_us = d(delta)/d(a_lat) - K_a by centered differences over samples with
/// strictly increasing a_lat. Throws std::invalid_argument otherwise.
std::vector<UndersteerSample> understeer_gradient(
    const std::vector<double>& a_lat, const std::vector<double>& delta,
    double v, double wheelbase);

/// Branch version restricted to |a_lat| <= a_lat_max before the fold. Throws
/// std::invalid_argument when the window reaches past the fold.
std::vector<UndersteerSample> understeer_gradient(const ManifoldBranch& branch,
                                                  double wheelbase,
                                                  double a_lat_max);

/// Returns a copy of the vehicle with one named parameter replaced. "b"
/// keeps the wheelbase fixed; also accepts "h", "m", "I_zz", "I_xz".
VehicleParams with_parameter(const VehicleParams& p, std::string_view name,
                             double value);

struct SweepEntry {
  double value = 0.0;
  std::optional<ManifoldBranch> branch;
  std::string error;  // set when tracing failed
};

/// One branch per value from the zero seed; failures are recorded per entry.
std::vector<SweepEntry> sweep_parameter(std::string_view name,
                                        const std::vector<double>& values,
                                        double v, const EquilibriumSystem& sys,
                                        const ContinuationOptions& opt = {},
                                        int threads = 1);

}  // namespace ltcar::manifold
