#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltcar/vehicle.hpp"

namespace ltcar::trajopt {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat3 = Eigen::Matrix<double, 3, 3>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

enum class DynamicsModel { kLtCar, kBicycle };

DynamicsModel dynamics_model_from_string(std::string_view name);
std::string_view to_string(DynamicsModel m);

/// Car plus the choice of load model; f(x, u) is the six-state vector field.
struct Plant {
  CarModel car;
  DynamicsModel model = DynamicsModel::kLtCar;

  Vec6 f(const Vec6& x, const Vec3& u) const;
};

/// One classical RK4 step with the input held over [t, t + dt].
Vec6 rk4_step(const Plant& plant, const Vec6& x, const Vec3& u, double dt);

/// State and input samples on the uniform grid t_k = k dt, k = 0..N. A curve
/// need not satisfy the dynamics.
struct Curve {
  double dt = 0.01;
  std::vector<Vec6> x;
  std::vector<Vec3> u;

  std::size_t size() const { return x.size(); }
  double time(std::size_t k) const { return static_cast<double>(k) * dt; }
  double horizon() const { return time(size() - 1); }
  /// Throws std::invalid_argument on an empty curve, dt <= 0, mismatched
  /// lengths or non-finite samples.
  void validate() const;
};

/// A curve that satisfies the discrete dynamics x_{k+1} = Phi(x_k, u_k).
/// Only integration and projection produce one; adopt() admits an external
/// curve after checking its defect.
class Trajectory {
 public:
  const Curve& curve() const { return c_; }
  std::size_t size() const { return c_.size(); }
  double dt() const { return c_.dt; }
  const Vec6& x(std::size_t k) const { return c_.x[k]; }
  const Vec3& u(std::size_t k) const { return c_.u[k]; }

  /// Largest one-step defect |Phi(x_k, u_k) - x_{k+1}| scaled by
  /// max(1, |x_{k+1}|), componentwise.
  static double defect(const Curve& c, const Plant& plant);
  /// Throws std::invalid_argument when the defect exceeds tol.
  static Trajectory adopt(Curve c, const Plant& plant, double tol = 1e-6);

 private:
  explicit Trajectory(Curve c) : c_(std::move(c)) {}
  Curve c_;

  friend Trajectory integrate(const Vec6&, const std::vector<Vec3>&, double,
                              const Plant&);
  friend Trajectory project(const Curve&, const std::vector<Mat36>&,
                            const Plant&);
};

/// Fixed-step RK4 from x0 with zero-order-held inputs u_0..u_N. Failures of
/// the vector field are rethrown with the time at which they occurred.
Trajectory integrate(const Vec6& x0, const std::vector<Vec3>& inputs,
                     double dt, const Plant& plant);

/// RK4 with a continuous-time input evaluated at the stage times; returns the
/// state samples only. Used for convergence-order studies.
std::vector<Vec6> integrate_states(const Vec6& x0,
                                   const std::function<Vec3(double)>& input,
                                   double dt, std::size_t steps,
                                   const Plant& plant);

struct Weights {
  Mat6 Q = (Vec6() << 10, 10, 1, 1, 1, 1).finished().asDiagonal();
  Mat3 R = 0.1 * Mat3::Identity();
  Mat6 P1 = (Vec6() << 10, 10, 1, 1, 1, 1).finished().asDiagonal();
  Mat6 Q_K = (Vec6() << 10, 10, 1, 1, 1, 1).finished().asDiagonal();
  Mat3 R_K = 0.1 * Mat3::Identity();
  /// Inputs the optimizer may move (delta, kappa_r, kappa_f). Masked inputs
  /// keep their current values and receive no feedback.
  Eigen::Matrix<bool, 3, 1> active{true, true, true};

  /// Throws std::invalid_argument unless R, R_K are positive definite and
  /// Q, P1, Q_K symmetric positive semidefinite.
  void validate() const;
};

using GainSchedule = std::vector<Mat36>;

/// Finite-horizon continuous Riccati sweep for a generic time-varying linear
/// system sampled on a uniform grid: -dP/dt = A'P + PA - PBR^-1B'P + Q,
/// P(T) = P_T, integrated backward with RK4, substepping each interval
/// by the local stiffness (A, B interpolated linearly).
/// Returns K_k = R^-1 B_k' P_k. Throws NumericError(kRiccatiBlowUp).
struct RiccatiResult {
  std::vector<Eigen::MatrixXd> K;
  std::vector<Eigen::MatrixXd> P;
};
RiccatiResult riccati_gains(const std::vector<Eigen::MatrixXd>& A,
                            const std::vector<Eigen::MatrixXd>& B,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                            const Eigen::MatrixXd& P_T, double dt);

/// Continuous Jacobians of f by central differences.
void linearize(const Plant& plant, const Vec6& x, const Vec3& u, Mat6& A,
               Mat63& B);
/// Jacobians of the RK4 step map by central differences.
void linearize_step(const Plant& plant, const Vec6& x, const Vec3& u,
                    double dt, Mat6& A, Mat63& B);

enum class GainDesign {
  // Discrete Riccati recursion on the step-map Jacobians with stage weights
  // (Q_K dt, R_K dt): the sample-and-hold counterpart of the continuous
  // design, stabilizing for the discrete closed loop at any dt.
  kSampled,
  // Continuous differential Riccati sweep on the FD Jacobians of f. Its
  // closed-loop poles can be too fast for the held input at coarse dt.
  kContinuous,
};

GainDesign gain_design_from_string(std::string_view name);
std::string_view to_string(GainDesign g);

/// Tracking gains around a trajectory from the regulator weights (Q_K, R_K),
/// terminal weight Q_K. Masked inputs get zero rows.
GainSchedule design_gain(const Trajectory& traj, const Weights& w,
                         const Plant& plant,
                         GainDesign method = GainDesign::kSampled);

/// Closed-loop projection x_0 = alpha_0, u_k = mu_k + K_k (alpha_k - x_k).
Trajectory project(const Curve& xi, const GainSchedule& K, const Plant& plant);

/// Trapezoidal least-squares cost plus the terminal term. Throws
/// std::invalid_argument when the grids differ.
double cost(const Curve& xi, const Curve& desired, const Weights& w);

enum class HessianMode { kGaussNewton, kNewton };

/// A tangent vector at a trajectory: state and input perturbations obeying
/// the linearized step map with zeta_x(0) = 0.
struct Direction {
  std::vector<Vec6> z;
  std::vector<Vec3> v;
  double slope = 0.0;  // Dg . zeta
  bool gauss_newton_fallback = false;
};

/// Discrete linearization of the step map along a trajectory.
struct Linearization {
  std::vector<Mat6> A;
  std::vector<Mat63> B;
};
Linearization linearize_trajectory(const Trajectory& traj, const Plant& plant);
/// Same along samples that need not satisfy the dynamics.
Linearization linearize_curve(const Curve& c, const Plant& plant);

/// Sampled-data gain design from a precomputed step linearization.
GainSchedule sampled_gain(const Linearization& lin, const Weights& w,
                          double dt);

/// Projection of a curve with the sampled gain designed along the curve
/// itself; this is how a desired curve enters the trajectory manifold.
Trajectory project_curve(const Curve& xi, const Weights& w, const Plant& plant);

/// Minimizer of Dg.zeta + 1/2 D2g(zeta, zeta) over the tangent space. In
/// Newton mode the second derivative of the projection is included; a
/// non-convex subproblem falls back to Gauss-Newton.
Direction descent_direction(const Trajectory& traj, const Curve& desired,
                            const GainSchedule& K, const Weights& w,
                            const Plant& plant, const Linearization& lin,
                            HessianMode mode = HessianMode::kGaussNewton);

/// Dg.zeta by the adjoint recursion, for an input perturbation v (the state
/// part follows from the linearized dynamics).
double directional_derivative(const Trajectory& traj, const Curve& desired,
                              const Weights& w, const Linearization& lin,
                              const std::vector<Vec3>& v);

/// Tangent vector generated by an input perturbation through the linearized
/// dynamics.
std::vector<Vec6> propagate_tangent(const Linearization& lin,
                                    const std::vector<Vec3>& v);

struct LineSearchOptions {
  double sigma = 0.4;
  int max_halvings = 12;
};

struct LineSearchResult {
  double gamma = 0.0;
  std::optional<Trajectory> next;
  double cost = 0.0;
};

/// Largest gamma in {1, 1/2, ..., 2^-max_halvings} meeting the Armijo
/// condition on g(P(xi + gamma zeta)); next is empty when none does.
LineSearchResult line_search(const Trajectory& traj, const Direction& dir,
                             const Curve& desired, const GainSchedule& K,
                             const Weights& w, const Plant& plant,
                             double current_cost,
                             const LineSearchOptions& opt = {});

struct IterateRecord {
  int iter = 0;
  double cost = 0.0;
  double grad_zeta = 0.0;
  double gamma = 0.0;  // step accepted after this record; 0 when none
};

enum class StopReason { kConverged, kMaxIterations, kLineSearchStall };
std::string_view to_string(StopReason r);

struct NewtonOptions {
  double grad_tol = 1e-6;  // relative: |Dg.zeta| <= grad_tol (1 + g)
  int max_iter = 50;
  HessianMode mode = HessianMode::kGaussNewton;
  GainDesign gain = GainDesign::kSampled;
  LineSearchOptions line_search;
};

struct NewtonResult {
  Trajectory trajectory;
  std::vector<IterateRecord> log;
  StopReason reason = StopReason::kMaxIterations;
  bool used_fallback = false;
};

/// Projection-operator Newton method. Integration or Riccati failures are
/// rethrown with the iterate number in the message.
NewtonResult po_newton(const Trajectory& xi0, const Curve& desired,
                       const Weights& w, const Plant& plant,
                       const NewtonOptions& opt = {});

}  // namespace ltcar::trajopt
