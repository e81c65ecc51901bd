#pragma once

#include <Eigen/Core>

#include "ltcar/tire.hpp"

namespace ltcar {

using Vec3 = Eigen::Matrix<double, 3, 1>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Inertial and geometric constants of the single-track car. The body frame
/// sits at the rear contact point, forward-right-down.
struct VehicleParams {
  double m;     // mass [kg]
  double a;     // CoM to front contact [m]
  double b;     // rear contact to CoM [m]
  double h;     // CoM height [m]
  double I_zz;  // yaw inertia [kg m^2]
  double I_xz;  // cross inertia [kg m^2]
  double I_yy;  // pitch inertia [kg m^2]; cancels from the planar equations
  double g = 9.81;

  double wheelbase() const { return a + b; }
  void validate() const;
};

/// Six-state pose-plus-velocity vector in the (vx, vy) chart.
struct CarState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double psidot = 0.0;

  double speed() const;
  /// Vehicle sideslip atan(vy / vx); only meaningful while vx != 0.
  double sideslip() const;

  Vec6 to_vector() const { return {x, y, psi, vx, vy, psidot}; }
  static CarState from_vector(const Vec6& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }
};

/// Body velocities in the (v, beta) chart.
struct PolarVelocity {
  double v = 0.0;
  double beta = 0.0;
  double psidot = 0.0;
};

struct CarInput {
  double delta = 0.0;
  double kappa_r = 0.0;
  double kappa_f = 0.0;

  Vec3 to_vector() const { return {delta, kappa_r, kappa_f}; }
  static CarInput from_vector(const Vec3& u) { return {u[0], u[1], u[2]}; }
};

/// Signed normal forces in the z-down frame. Physical loads are the
/// magnitudes, exposed by front_load() and rear_load().
struct NormalLoads {
  double ffz = 0.0;
  double frz = 0.0;

  double front_load() const { return -ffz; }
  double rear_load() const { return -frz; }
};

struct WellPosedness {
  bool ok = false;
  /// Smaller of the two slacks in the well-posedness inequalities, scaled to
  /// force units by m g h / (a + b). Negative outside the region.
  double margin = 0.0;
};

/// Everything the equations of motion need besides the state and input.
struct CarModel {
  VehicleParams vehicle;
  tire::TirePair tires;
  double vx_min = 0.5;  // slip computation floor [m/s]
};

struct ContactSlips {
  tire::SlipState rear;
  tire::SlipState front;
};

/// Body-frame friction coefficients of both axles; the front pair already
/// rotated by the steer angle.
struct AxleCoefficients {
  double mu_fx, mu_fy, mu_rx, mu_ry;
};

struct BodyAccelerations {
  double dvx, dvy, ddpsi;
  NormalLoads loads;
};

struct PolarAccelerations {
  double dv, dbeta, ddpsi;
  NormalLoads loads;
};

/// Closed-form constrained normal loads. Throws NumericError(kIllPosedModel)
/// outside the well-posed region.
NormalLoads normal_loads(double mu_fx, double mu_rx, double psidot,
                         const VehicleParams& p);

/// The static (no load transfer) split used by the bicycle reference.
NormalLoads static_loads(const VehicleParams& p);

WellPosedness well_posed(double mu_fx, double mu_rx, double psidot,
                         const VehicleParams& p);

/// Contact-point slips. Throws NumericError(kDegenerateSpeed) when
/// vx <= vx_min.
ContactSlips contact_slips(const CarState& s, const CarInput& u,
                           const VehicleParams& p, double vx_min = 0.5);

/// Body-frame coefficients for the given slips. The lateral tire force
/// opposes the contact-point lateral velocity.
AxleCoefficients axle_coefficients(const ContactSlips& slips,
                                   const tire::TirePair& tires);

/// Solves the 5x5 constrained system in (dvx, dvy, ddpsi, ffz, frz).
BodyAccelerations dynamics_vxvy(const CarState& s, const CarInput& u,
                                const CarModel& model);

/// Solves the 5x5 constrained system in (dv, dbeta, ddpsi, ffz, frz).
PolarAccelerations dynamics_vbeta(const PolarVelocity& s, const CarInput& u,
                                  const CarModel& model);

/// Full six-state derivative (x, y, psi, vx, vy, psidot) of the load-transfer
/// model.
Vec6 full_dynamics(const CarState& s, const CarInput& u, const CarModel& model);

/// Same structure with the normal loads frozen at the static split.
Vec6 bicycle_dynamics(const CarState& s, const CarInput& u,
                      const CarModel& model);

BodyAccelerations bicycle_accelerations(const CarState& s, const CarInput& u,
                                        const CarModel& model);

}  // namespace ltcar
