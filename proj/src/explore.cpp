#include "ltcar/explore.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ltcar/io.hpp"

namespace ltcar::explore {

namespace {

std::string describe(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Fractional sample position in prev matching sample k of next.
double matching_index(const DesiredCurve& prev, const DesiredCurve& next,
                      std::size_t k) {
  const std::size_t np = prev.curve.size(), nn = next.curve.size();
  if (np < 2) return 0.0;
  if (prev.s.size() == np && next.s.size() == nn) {
    const double s = next.s[k];
    const auto it = std::lower_bound(prev.s.begin(), prev.s.end(), s);
    if (it == prev.s.begin()) return 0.0;
    if (it == prev.s.end()) return static_cast<double>(np - 1);
    const std::size_t j = static_cast<std::size_t>(it - prev.s.begin());
    return static_cast<double>(j - 1) +
           (s - prev.s[j - 1]) / (prev.s[j] - prev.s[j - 1]);
  }
  if (nn < 2) return 0.0;
  return static_cast<double>(k) * static_cast<double>(np - 1) /
         static_cast<double>(nn - 1);
}

template <typename V>
V lerp_samples(const std::vector<V>& a, double idx) {
  const std::size_t i =
      std::min(static_cast<std::size_t>(idx), a.size() - 1);
  if (i + 1 >= a.size()) return a.back();
  const double f = idx - static_cast<double>(i);
  return (1.0 - f) * a[i] + f * a[i + 1];
}

}  // namespace

DesiredCurve quasi_static(const PathSpec& path, const SpeedProfile& profile,
                          const CarModel& car, double dt,
                          tire::TireModel mode,
                          const QuasiStaticOptions& opt) {
  const PathSamples ps = path_to_pose(path, profile, dt);
  CarModel c = car;
  c.tires.model = mode;
  const manifold::EquilibriumSystem sys{c, opt.loads};

  DesiredCurve out;
  out.curve.dt = dt;
  out.s = ps.s;
  out.tire_model = mode;
  out.curve.x.resize(ps.size());
  out.curve.u.resize(ps.size());
  manifold::PointGuess guess;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const double v = ps.v[k];
    const double a_lat = v * v * ps.sigma[k];
    manifold::EquilibriumPoint p;
    try {
      p = manifold::solve_point(v, a_lat, guess, sys, opt.solve);
    } catch (const NumericError& e) {
      throw NumericError(NumericFailure::kInfeasible,
                         "quasi-static design (" + std::string(to_string(mode)) +
                             " tires) at v = " + describe(v) +
                             " m/s, a_lat = " + describe(a_lat) +
                             " m/s^2: " + e.detail(),
                         static_cast<double>(k) * dt);
    }
    guess = {p.x.beta, p.x.delta, p.x.kappa_r};
    const double beta = p.x.beta;
    out.curve.x[k] << ps.x[k], ps.y[k], ps.heading[k] - beta,
        v * std::cos(beta), v * std::sin(beta), v * ps.sigma[k];
    out.curve.u[k] << p.x.delta, p.x.kappa_r, 0.0;
  }
  return out;
}

DesiredCurve quasi_static_with_fallback(const PathSpec& path,
                                        const SpeedProfile& profile,
                                        const CarModel& car, double dt,
                                        const QuasiStaticOptions& opt) {
  try {
    return quasi_static(path, profile, car, dt, tire::TireModel::kPacejka, opt);
  } catch (const NumericError& e) {
    if (e.kind() != NumericFailure::kInfeasible) throw;
  }
  return quasi_static(path, profile, car, dt, tire::TireModel::kLinear, opt);
}

std::vector<DesiredCurve> morph_family(const CurveBuilder& builder,
                                       const std::vector<double>& schedule,
                                       int threads) {
  const std::size_t n = schedule.size();
  std::vector<std::optional<DesiredCurve>> built(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        built[i] = builder(schedule[i]);
        built[i]->parameter = schedule[i];
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t nt =
      std::clamp<std::size_t>(threads > 0 ? threads : 1, 1, std::max<std::size_t>(n, 1));
  if (nt == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    const std::string where = "family parameter " + describe(schedule[i]) + ": ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const NumericError& e) {
      throw NumericError(e.kind(), where + e.detail(), e.time());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(where + e.what());
    }
  }
  std::vector<DesiredCurve> out;
  out.reserve(n);
  for (auto& b : built) out.push_back(std::move(*b));
  return out;
}

std::vector<double> aggressiveness_schedule() {
  std::vector<double> s;
  for (int i = 5; i <= 10; ++i) s.push_back(i / 10.0);
  return s;
}

std::vector<double> speed_schedule(double from, double to, double step) {
  if (!(step > 0.0) || !(to >= from)) {
    throw std::invalid_argument("speed schedule needs step > 0 and to >= from");
  }
  std::vector<double> s;
  const int n = static_cast<int>(std::floor((to - from) / step + 1e-9));
  for (int i = 0; i <= n; ++i) s.push_back(from + i * step);
  return s;
}

CurveBuilder chicane_builder(const CarModel& car, double dt,
                             const QuasiStaticOptions& opt) {
  return [car, dt, opt](double aggressiveness) {
    const PathSpec path = chicane_track();
    const SpeedProfile prof =
        chicane_speed().scaled_deviation(aggressiveness, path.length());
    DesiredCurve d = quasi_static_with_fallback(path, prof, car, dt, opt);
    d.parameter = aggressiveness;
    return d;
  };
}

CurveBuilder loop_builder(const CarModel& car, double dt,
                          const QuasiStaticOptions& opt) {
  return [car, dt, opt](double v) {
    DesiredCurve d = quasi_static_with_fallback(
        loop_track(), SpeedProfile::constant(v), car, dt, opt);
    d.parameter = v;
    return d;
  };
}

Curve retime(const Trajectory& prev_opt, const DesiredCurve& prev_desired,
             const DesiredCurve& next_desired) {
  if (prev_opt.size() != prev_desired.curve.size()) {
    throw std::invalid_argument("previous optimum and desired curve differ in length");
  }
  const std::vector<Vec6>& px = prev_opt.curve().x;
  const std::vector<Vec3>& pu = prev_opt.curve().u;
  Curve out = next_desired.curve;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double idx = matching_index(prev_desired, next_desired, k);
    // Same place on the path, driven at the new desired pace.
    const Vec6 xd_prev = lerp_samples(prev_desired.curve.x, idx);
    const double v_prev = std::hypot(xd_prev[3], xd_prev[4]);
    const double v_next = std::hypot(out.x[k][3], out.x[k][4]);
    const double pace = v_prev > 0.0 ? v_next / v_prev : 1.0;
    Vec6 x = lerp_samples(px, idx);
    x.tail<3>() *= pace;
    out.x[k] = x;
    out.u[k] = lerp_samples(pu, idx);
  }
  out.x[0] = next_desired.curve.x[0];
  return out;
}

Curve carry_in_time(const Trajectory& prev_opt, const DesiredCurve& next_desired) {
  const Curve& p = prev_opt.curve();
  Curve out = next_desired.curve;
  const double ratio = out.dt / p.dt;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double idx = std::min(static_cast<double>(k) * ratio,
                                static_cast<double>(p.size() - 1));
    out.x[k] = lerp_samples(p.x, idx);
    out.u[k] = lerp_samples(p.u, idx);
  }
  return out;
}

ExploreResult explore(const std::vector<DesiredCurve>& family,
                      const trajopt::Weights& w, const trajopt::Plant& plant,
                      const trajopt::NewtonOptions& opt) {
  if (family.empty()) throw std::invalid_argument("empty desired-curve family");
  ExploreResult r;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const DesiredCurve& d = family[i];
    try {
      std::optional<Trajectory> xi0;
      if (i == 0) {
        xi0 = trajopt::project_curve(d.curve, w, plant);
      } else {
        const Trajectory& prev = r.legs.back().result.trajectory;
        try {
          xi0 = trajopt::project_curve(retime(prev, family[i - 1], d), w, plant);
        } catch (const NumericError&) {
          xi0 = trajopt::project_curve(carry_in_time(prev, d), w, plant);
        }
      }
      const double c0 = trajopt::cost(xi0->curve(), d.curve, w);
      trajopt::NewtonResult nr = trajopt::po_newton(*xi0, d.curve, w, plant, opt);
      r.legs.push_back(Leg{d.parameter, c0, std::move(nr)});
    } catch (const NumericError& e) {
      r.failure = NumericError(e.kind(),
                               "leg " + std::to_string(i + 1) + " (parameter " +
                                   describe(d.parameter) + "): " + e.detail(),
                               e.time());
      r.failed_parameter = d.parameter;
      break;
    }
  }
  return r;
}

double lateral_acceleration(const trajopt::Plant& plant, const Vec6& x,
                            const Vec3& u) {
  const Vec6 f = plant.f(x, u);
  // Body-frame inertial acceleration of the center of mass.
  const double ax = f[3] - x[5] * x[4];
  const double ay = f[4] + x[5] * x[3];
  const double v = std::hypot(x[3], x[4]);
  if (!(v > 0.0)) return 0.0;
  return (x[3] * ay - x[4] * ax) / v;
}

trajopt::Weights synthetic_scenario_weights() {
  trajopt::Weights w;
  w.active << true, true, false;
  w.R_K = trajopt::Mat3::Identity();
  return w;
}

trajopt::Weights external_curve_weights() {
  trajopt::Weights w;
  w.R = 1e-3 * trajopt::Mat3::Identity();
  return w;
}

DesiredCurve load_external_curve(const std::string& path, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const io::TrajectoryTable tab = io::read_trajectory_csv(path);
  const double t0 = tab.t.front(), span = tab.t.back() - t0;
  const auto n = static_cast<std::size_t>(std::floor(span / dt + 1e-9)) + 1;
  DesiredCurve out;
  out.curve.dt = dt;
  out.curve.x.resize(n);
  out.curve.u.resize(n);
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    while (j + 2 < tab.t.size() && tab.t[j + 1] < t) ++j;
    if (tab.t.size() == 1) {
      out.curve.x[k] = tab.x[0];
      out.curve.u[k] = tab.u[0];
      continue;
    }
    const double f =
        std::clamp((t - tab.t[j]) / (tab.t[j + 1] - tab.t[j]), 0.0, 1.0);
    out.curve.x[k] = (1 - f) * tab.x[j] + f * tab.x[j + 1];
    out.curve.u[k] = (1 - f) * tab.u[j] + f * tab.u[j + 1];
  }
  return out;
}

}  // namespace ltcar::explore
