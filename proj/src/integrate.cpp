#include <cmath>
#include <stdexcept>

#include "ltcar/errors.hpp"
#include "ltcar/trajopt.hpp"

namespace ltcar::trajopt {

DynamicsModel dynamics_model_from_string(std::string_view name) {
  if (name == "ltcar") return DynamicsModel::kLtCar;
  if (name == "bicycle") return DynamicsModel::kBicycle;
  throw std::invalid_argument("unknown dynamics model '" + std::string(name) +
                              "' (expected ltcar or bicycle)");
}

std::string_view to_string(DynamicsModel m) {
  return m == DynamicsModel::kLtCar ? "ltcar" : "bicycle";
}

Vec6 Plant::f(const Vec6& x, const Vec3& u) const {
  const CarState s = CarState::from_vector(x);
  const CarInput in = CarInput::from_vector(u);
  try {
    return model == DynamicsModel::kLtCar ? full_dynamics(s, in, car)
                                          : bicycle_dynamics(s, in, car);
  } catch (const std::invalid_argument& e) {
    throw NumericError(NumericFailure::kOutOfDomain, e.what());
  }
}

Vec6 rk4_step(const Plant& plant, const Vec6& x, const Vec3& u, double dt) {
  const Vec6 k1 = plant.f(x, u);
  const Vec6 k2 = plant.f(x + 0.5 * dt * k1, u);
  const Vec6 k3 = plant.f(x + 0.5 * dt * k2, u);
  const Vec6 k4 = plant.f(x + dt * k3, u);
  return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
}

void Curve::validate() const {
  if (x.empty()) throw std::invalid_argument("curve has no samples");
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("curve time step must be positive");
  }
  if (x.size() != u.size()) {
    throw std::invalid_argument("curve state and input lengths differ");
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!x[k].allFinite() || !u[k].allFinite()) {
      throw std::invalid_argument("curve sample " + std::to_string(k) +
                                  " is not finite");
    }
  }
}

double Trajectory::defect(const Curve& c, const Plant& plant) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < c.size(); ++k) {
    const Vec6 next = rk4_step(plant, c.x[k], c.u[k], c.dt);
    const Vec6 scale = c.x[k + 1].cwiseAbs().cwiseMax(1.0);
    worst = std::max(worst,
                     (next - c.x[k + 1]).cwiseAbs().cwiseQuotient(scale).maxCoeff());
  }
  return worst;
}

Trajectory Trajectory::adopt(Curve c, const Plant& plant, double tol) {
  c.validate();
  const double d = defect(c, plant);
  if (!(d <= tol)) {
    throw std::invalid_argument("curve is not a trajectory: defect " +
                                std::to_string(d));
  }
  return Trajectory(std::move(c));
}

Trajectory integrate(const Vec6& x0, const std::vector<Vec3>& inputs,
                     double dt, const Plant& plant) {
  Curve c;
  c.dt = dt;
  c.u = inputs;
  c.x.resize(inputs.size());
  if (inputs.empty()) throw std::invalid_argument("no input samples");
  c.x[0] = x0;
  for (std::size_t k = 0; k + 1 < inputs.size(); ++k) {
    try {
      c.x[k + 1] = rk4_step(plant, c.x[k], inputs[k], dt);
    } catch (const NumericError& e) {
      throw e.at_time(c.time(k));
    }
  }
  c.validate();
  return Trajectory(std::move(c));
}

std::vector<Vec6> integrate_states(const Vec6& x0,
                                   const std::function<Vec3(double)>& input,
                                   double dt, std::size_t steps,
                                   const Plant& plant) {
  std::vector<Vec6> xs{x0};
  xs.reserve(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Vec6& x = xs.back();
    try {
      const Vec6 k1 = plant.f(x, input(t));
      const Vec6 k2 = plant.f(x + 0.5 * dt * k1, input(t + 0.5 * dt));
      const Vec6 k3 = plant.f(x + 0.5 * dt * k2, input(t + 0.5 * dt));
      const Vec6 k4 = plant.f(x + dt * k3, input(t + dt));
      xs.push_back(x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
    } catch (const NumericError& e) {
      throw e.at_time(t);
    }
  }
  return xs;
}

namespace {

template <typename F, typename Out>
void central_jacobian(const F& fn, const Vec6& x, const Vec3& u, Mat6& A,
                      Mat63& B) {
  for (int i = 0; i < 6; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Vec6 xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    A.col(i) = (Out(fn(xp, u)) - Out(fn(xm, u))) / (2 * h);
  }
  for (int i = 0; i < 3; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(u[i]));
    Vec3 up = u, um = u;
    up[i] += h;
    um[i] -= h;
    B.col(i) = (Out(fn(x, up)) - Out(fn(x, um))) / (2 * h);
  }
}

}  // namespace

void linearize(const Plant& plant, const Vec6& x, const Vec3& u, Mat6& A,
               Mat63& B) {
  auto fn = [&](const Vec6& xx, const Vec3& uu) { return plant.f(xx, uu); };
  central_jacobian<decltype(fn), Vec6>(fn, x, u, A, B);
}

void linearize_step(const Plant& plant, const Vec6& x, const Vec3& u,
                    double dt, Mat6& A, Mat63& B) {
  auto fn = [&](const Vec6& xx, const Vec3& uu) {
    return rk4_step(plant, xx, uu, dt);
  };
  central_jacobian<decltype(fn), Vec6>(fn, x, u, A, B);
}

Linearization linearize_curve(const Curve& c, const Plant& plant) {
  Linearization lin;
  const std::size_t n = c.size();
  lin.A.resize(n > 0 ? n - 1 : 0);
  lin.B.resize(lin.A.size());
  for (std::size_t k = 0; k + 1 < n; ++k) {
    try {
      linearize_step(plant, c.x[k], c.u[k], c.dt, lin.A[k], lin.B[k]);
    } catch (const NumericError& e) {
      throw e.at_time(c.time(k));
    }
  }
  return lin;
}

Linearization linearize_trajectory(const Trajectory& traj, const Plant& plant) {
  return linearize_curve(traj.curve(), plant);
}

Trajectory project_curve(const Curve& xi, const Weights& w,
                         const Plant& plant) {
  xi.validate();
  if (xi.size() < 2) {
    throw std::invalid_argument("projection needs at least two samples");
  }
  return project(xi, sampled_gain(linearize_curve(xi, plant), w, xi.dt),
                 plant);
}

Trajectory project(const Curve& xi, const GainSchedule& K, const Plant& plant) {
  xi.validate();
  if (K.size() != xi.size()) {
    throw std::invalid_argument("gain schedule and curve lengths differ");
  }
  Curve out;
  out.dt = xi.dt;
  out.x.resize(xi.size());
  out.u.resize(xi.size());
  out.x[0] = xi.x[0];
  for (std::size_t k = 0; k < xi.size(); ++k) {
    out.u[k] = xi.u[k] + K[k] * (xi.x[k] - out.x[k]);
    if (k + 1 == xi.size()) break;
    try {
      out.x[k + 1] = rk4_step(plant, out.x[k], out.u[k], xi.dt);
    } catch (const NumericError& e) {
      throw e.at_time(xi.time(k));
    }
  }
  out.validate();
  return Trajectory(std::move(out));
}

double cost(const Curve& xi, const Curve& desired, const Weights& w) {
  if (xi.size() != desired.size() || xi.dt != desired.dt || xi.size() == 0) {
    throw std::invalid_argument("cost needs curves on a common grid");
  }
  const std::size_t n = xi.size();
  double running = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double wk = (k == 0 || k + 1 == n) ? 0.5 * xi.dt : xi.dt;
    const Vec6 ex = xi.x[k] - desired.x[k];
    const Vec3 eu = xi.u[k] - desired.u[k];
    running += wk * (ex.dot(w.Q * ex) + eu.dot(w.R * eu));
  }
  const Vec6 eN = xi.x[n - 1] - desired.x[n - 1];
  return 0.5 * running + 0.5 * eN.dot(w.P1 * eN);
}

}  // namespace ltcar::trajopt
