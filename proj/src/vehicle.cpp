#include "ltcar/vehicle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ltcar/errors.hpp"

namespace ltcar {

namespace {

using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec5 = Eigen::Matrix<double, 5, 1>;

// Condition-number ceiling for the constrained systems.
constexpr double kMinReciprocalCondition = 1e-12;

Vec5 solve_constrained(const Mat5& M, const Vec5& rhs) {
  const Eigen::PartialPivLU<Mat5> lu(M);
  if (!(lu.rcond() > kMinReciprocalCondition)) {
    throw NumericError(NumericFailure::kIllPosedModel,
                       "constrained mass matrix is singular");
  }
  return lu.solve(rhs);
}

void require_well_posed(const AxleCoefficients& mu, double psidot,
                        const VehicleParams& p) {
  const WellPosedness wp = well_posed(mu.mu_fx, mu.mu_rx, psidot, p);
  if (!wp.ok) {
    throw NumericError(
        NumericFailure::kIllPosedModel,
        "normal load would vanish (wheelie/stoppie), margin " +
            std::to_string(wp.margin) + " N");
  }
}

}  // namespace

void VehicleParams::validate() const {
  if (!(m > 0 && a > 0 && b > 0 && g > 0 && I_zz > 0)) {
    throw std::invalid_argument(
        "vehicle parameters require m, a, b, g, I_zz > 0");
  }
  if (!(h >= 0)) throw std::invalid_argument("vehicle parameters require h >= 0");
  if (!std::isfinite(I_xz) || !std::isfinite(I_yy)) {
    throw std::invalid_argument("vehicle inertias must be finite");
  }
}

double CarState::speed() const { return std::hypot(vx, vy); }

double CarState::sideslip() const { return std::atan2(vy, vx); }

WellPosedness well_posed(double mu_fx, double mu_rx, double psidot,
                         const VehicleParams& p) {
  // Both inequalities multiplied through by m g h, which keeps them defined
  // for h = 0.
  const double mg = p.m * p.g;
  const double yaw_term = p.I_xz * psidot * psidot;
  const double rear_slack = yaw_term + mg * p.b - mg * p.h * mu_rx;
  const double front_slack = mg * p.h * mu_fx - yaw_term + mg * p.a;
  return {rear_slack > 0.0 && front_slack > 0.0,
          std::min(rear_slack, front_slack) / p.wheelbase()};
}

NormalLoads normal_loads(double mu_fx, double mu_rx, double psidot,
                         const VehicleParams& p) {
  require_well_posed({mu_fx, 0.0, mu_rx, 0.0}, psidot, p);
  const double mg = p.m * p.g;
  const double yaw_term = p.I_xz * psidot * psidot;
  const double den = p.h * (mu_rx - mu_fx) - p.wheelbase();
  return {(mg * p.b - mg * p.h * mu_rx + yaw_term) / den,
          (mg * p.a + mg * p.h * mu_fx - yaw_term) / den};
}

NormalLoads static_loads(const VehicleParams& p) {
  const double mg = p.m * p.g;
  return {-mg * p.b / p.wheelbase(), -mg * p.a / p.wheelbase()};
}

ContactSlips contact_slips(const CarState& s, const CarInput& u,
                           const VehicleParams& p, double vx_min) {
  if (!std::isfinite(s.vx) || !std::isfinite(s.vy) ||
      !std::isfinite(s.psidot) || !std::isfinite(u.delta)) {
    throw std::invalid_argument("non-finite state or input");
  }
  if (!(s.vx > vx_min)) {
    throw NumericError(NumericFailure::kDegenerateSpeed,
                       "longitudinal speed " + std::to_string(s.vx) +
                           " m/s is below the slip floor");
  }
  // Front contact sits at (a + b, 0) in the body frame.
  ContactSlips out;
  out.rear = {u.kappa_r, std::atan(s.vy / s.vx), 0.0};
  out.front = {u.kappa_f,
               std::atan((s.vy + p.wheelbase() * s.psidot) / s.vx) - u.delta,
               u.delta};
  return out;
}

AxleCoefficients axle_coefficients(const ContactSlips& slips,
                                   const tire::TirePair& tires) {
  const tire::FrictionPair rear =
      tire::evaluate(slips.rear, tires.rear, tires.model);
  const tire::FrictionPair front_tire =
      tire::evaluate(slips.front, tires.front, tires.model);
  const tire::FrictionPair front =
      tire::steered_frame({front_tire.mu_x, -front_tire.mu_y},
                          slips.front.delta);
  return {front.mu_x, front.mu_y, rear.mu_x, -rear.mu_y};
}

namespace {

ContactSlips slips_with_geometry(const CarState& s, const CarInput& u,
                                 const CarModel& model) {
  return contact_slips(s, u, model.vehicle, model.vx_min);
}

}  // namespace

BodyAccelerations dynamics_vxvy(const CarState& s, const CarInput& u,
                                const CarModel& model) {
  const VehicleParams& p = model.vehicle;
  const AxleCoefficients mu =
      axle_coefficients(slips_with_geometry(s, u, model), model.tires);
  require_well_posed(mu, s.psidot, p);

  const double m = p.m;
  const double L = p.wheelbase();
  const double r = s.psidot;
  Mat5 M;
  M << m, 0, 0, mu.mu_fx, mu.mu_rx,
       0, m, m * p.b, mu.mu_fy, mu.mu_ry,
       0, m * p.b, p.I_zz + m * p.b * p.b, L * mu.mu_fy, 0,
       0, 0, 0, -1, -1,
       -m * p.h, 0, 0, L, 0;
  Vec5 coriolis_gravity;
  coriolis_gravity << -m * p.b * r * r - m * s.vy * r,
                      m * s.vx * r,
                      m * p.b * s.vx * r,
                      -m * p.g,
                      (p.I_xz + m * p.h * p.b) * r * r + m * p.h * s.vy * r +
                          m * p.g * p.b;
  const Vec5 z = solve_constrained(M, -coriolis_gravity);
  return {z[0], z[1], z[2], {z[3], z[4]}};
}

PolarAccelerations dynamics_vbeta(const PolarVelocity& s, const CarInput& u,
                                  const CarModel& model) {
  if (!(s.v > 0.0)) {
    throw NumericError(NumericFailure::kDegenerateSpeed,
                       "speed must be positive in the (v, beta) chart");
  }
  const VehicleParams& p = model.vehicle;
  const double cb = std::cos(s.beta);
  const double sb = std::sin(s.beta);
  const CarState cart{0, 0, 0, s.v * cb, s.v * sb, s.psidot};
  const AxleCoefficients mu =
      axle_coefficients(slips_with_geometry(cart, u, model), model.tires);
  require_well_posed(mu, s.psidot, p);

  const double m = p.m;
  const double v = s.v;
  const double L = p.wheelbase();
  const double r = s.psidot;
  Mat5 M;
  M << m * cb, -m * v * sb, 0, mu.mu_fx, mu.mu_rx,
       m * sb, m * v * cb, m * p.b, mu.mu_fy, mu.mu_ry,
       m * p.b * sb, m * p.b * v * cb, p.I_zz + m * p.b * p.b, L * mu.mu_fy, 0,
       0, 0, 0, -1, -1,
       -m * p.h * cb, m * p.h * v * sb, 0, L, 0;
  Vec5 coriolis_gravity;
  coriolis_gravity << -m * v * r * sb - m * p.b * r * r,
                      m * v * r * cb,
                      m * p.b * v * r * cb,
                      -m * p.g,
                      (p.I_xz + m * p.h * p.b) * r * r + m * p.h * v * r * sb +
                          m * p.g * p.b;
  const Vec5 z = solve_constrained(M, -coriolis_gravity);
  return {z[0], z[1], z[2], {z[3], z[4]}};
}

namespace {

Vec6 assemble(const CarState& s, const BodyAccelerations& acc) {
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  Vec6 d;
  d << s.vx * c - s.vy * sn, s.vx * sn + s.vy * c, s.psidot, acc.dvx, acc.dvy,
      acc.ddpsi;
  return d;
}

}  // namespace

Vec6 full_dynamics(const CarState& s, const CarInput& u,
                   const CarModel& model) {
  return assemble(s, dynamics_vxvy(s, u, model));
}

BodyAccelerations bicycle_accelerations(const CarState& s, const CarInput& u,
                                        const CarModel& model) {
  const VehicleParams& p = model.vehicle;
  const AxleCoefficients mu =
      axle_coefficients(slips_with_geometry(s, u, model), model.tires);
  const NormalLoads loads = static_loads(p);
  const double m = p.m;
  const double L = p.wheelbase();
  const double r = s.psidot;

  const double dvx = (m * p.b * r * r + m * s.vy * r - mu.mu_fx * loads.ffz -
                      mu.mu_rx * loads.frz) /
                     m;
  // Lateral and yaw rows share the 2x2 block [[m, m b], [m b, I_zz + m b^2]].
  const double f2 = -m * s.vx * r - mu.mu_fy * loads.ffz - mu.mu_ry * loads.frz;
  const double f3 = -m * p.b * s.vx * r - L * mu.mu_fy * loads.ffz;
  const double k11 = m;
  const double k12 = m * p.b;
  const double k22 = p.I_zz + m * p.b * p.b;
  const double det = k11 * k22 - k12 * k12;
  return {dvx, (k22 * f2 - k12 * f3) / det, (k11 * f3 - k12 * f2) / det,
          loads};
}

Vec6 bicycle_dynamics(const CarState& s, const CarInput& u,
                      const CarModel& model) {
  return assemble(s, bicycle_accelerations(s, u, model));
}

}  // namespace ltcar
