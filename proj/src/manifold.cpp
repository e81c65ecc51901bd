#include "ltcar/manifold.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "ltcar/errors.hpp"

namespace ltcar::manifold {

namespace {

using Mat3 = Eigen::Matrix3d;

NormalLoads equilibrium_loads(const EquilibriumUnknowns& x, double v,
                              const EquilibriumSystem& sys) {
  const VehicleParams& p = sys.car.vehicle;
  if (sys.loads == LoadModel::kStatic) return static_loads(p);
  const double L = p.wheelbase();
  const double r = x.a_lat / v;
  const double transfer = ((p.I_xz + p.m * p.h * p.b) * r * r +
                           x.a_lat * p.m * p.h * std::sin(x.beta)) /
                          L;
  const NormalLoads loads{-(p.m * p.g * p.b / L + transfer),
                          -(p.m * p.g * p.a / L - transfer)};
  if (!(loads.front_load() > 0.0 && loads.rear_load() > 0.0)) {
    throw NumericError(NumericFailure::kIllPosedModel,
                       "equilibrium normal load is not positive");
  }
  return loads;
}

Mat34 scaled(const Mat34& J, const Vec4& scale) {
  return J * scale.asDiagonal();
}

EquilibriumPoint make_point(const EquilibriumUnknowns& x, double v,
                            const EquilibriumDetail& d) {
  EquilibriumPoint pt;
  pt.x = x;
  pt.v = v;
  pt.loads = d.loads;
  pt.beta_r = d.slips.rear.beta;
  pt.beta_f = d.slips.front.beta;
  pt.mu_rx = d.mu.mu_rx;
  pt.residual_norm = d.residual.norm();
  return pt;
}

void require_speed(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw NumericError(NumericFailure::kDegenerateSpeed,
                       "equilibrium speed must be positive");
  }
}

}  // namespace

EquilibriumDetail evaluate(const EquilibriumUnknowns& x, double v,
                           const EquilibriumSystem& sys) {
  require_speed(v);
  const VehicleParams& p = sys.car.vehicle;
  const double L = p.wheelbase();
  const double m = p.m;
  const double r = x.a_lat / v;
  // Velocity is tangent to the circle, so the acceleration is a_lat along the
  // inward normal: rotated by -beta into the body frame.
  const double ax = -x.a_lat * std::sin(x.beta);
  const double ay = x.a_lat * std::cos(x.beta);

  EquilibriumDetail d;
  d.psidot = r;
  d.loads = equilibrium_loads(x, v, sys);
  const CarState s{0, 0, 0, v * std::cos(x.beta), v * std::sin(x.beta), r};
  d.slips = contact_slips(s, {x.delta, x.kappa_r, 0.0}, p, sys.car.vx_min);
  d.mu = axle_coefficients(d.slips, sys.car.tires);
  const double ffz = d.loads.ffz;
  const double frz = d.loads.frz;
  d.residual << m * ax - m * p.b * r * r + d.mu.mu_fx * ffz + d.mu.mu_rx * frz,
      m * ay + d.mu.mu_fy * ffz + d.mu.mu_ry * frz,
      m * p.b * ay + L * d.mu.mu_fy * ffz;
  return d;
}

Vec3 residual(const EquilibriumUnknowns& x, double v,
              const EquilibriumSystem& sys) {
  return evaluate(x, v, sys).residual;
}

Mat34 jacobian(const EquilibriumUnknowns& x, double v,
               const EquilibriumSystem& sys, double rel_step) {
  const Vec4 x0 = x.to_vector();
  Mat34 J;
  for (int i = 0; i < 4; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x0[i]));
    Vec4 xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) = (residual(EquilibriumUnknowns::from_vector(xp), v, sys) -
                residual(EquilibriumUnknowns::from_vector(xm), v, sys)) /
               (2 * h);
  }
  return J;
}

Vec4 tangent(const Mat34& J, const std::optional<Vec4>& prev) {
  const Eigen::JacobiSVD<Mat34> svd(J, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[2] / sv[0] < 1e-10) {
    throw NumericError(NumericFailure::kSingularPoint,
                       "equilibrium Jacobian has rank below three");
  }
  Vec4 t = svd.matrixV().col(3).normalized();
  if (prev ? t.dot(*prev) < 0.0 : t[0] < 0.0) t = -t;
  return t;
}

EquilibriumPoint newton_correct(const Vec4& alpha, double v,
                                const EquilibriumSystem& sys,
                                const ContinuationOptions& opt) {
  const Vec4& S = opt.scale;
  Vec4 z = alpha.cwiseQuotient(S);
  for (int it = 0; it <= opt.max_corrector_iterations; ++it) {
    const EquilibriumUnknowns x = EquilibriumUnknowns::from_vector(z.cwiseProduct(S));
    const EquilibriumDetail d = evaluate(x, v, sys);
    if (d.residual.norm() <= opt.nu) return make_point(x, v, d);
    if (it == opt.max_corrector_iterations) break;
    const Mat34 Js = scaled(jacobian(x, v, sys), S);
    // Minimum-norm step J^+ f for a full-row-rank J.
    const Vec3 w = (Js * Js.transpose()).ldlt().solve(d.residual);
    z -= Js.transpose() * w;
    if (!z.allFinite()) break;
  }
  throw NumericError(NumericFailure::kNoConvergence,
                     "equilibrium corrector did not reach the tolerance");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kMaxPoints: return "max-points";
    case Termination::kSingularPoint: return "singular-point";
    case Termination::kWellPosednessBoundary: return "well-posedness-boundary";
    case Termination::kDeltaLimit: return "steer-limit";
    case Termination::kKappaLimit: return "slip-limit";
    case Termination::kLateralSignChange: return "lateral-sign-change";
    case Termination::kStepUnderflow: return "step-underflow";
  }
  return "unknown";
}

std::size_t ManifoldBranch::max_lateral_index() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (orientation * points[i].x.a_lat > orientation * points[best].x.a_lat) {
      best = i;
    }
  }
  return best;
}

ManifoldBranch trace_branch(const EquilibriumUnknowns& seed, double v,
                            const EquilibriumSystem& sys,
                            const ContinuationOptions& opt) {
  if (opt.direction != 1 && opt.direction != -1) {
    throw std::invalid_argument("continuation direction must be +1 or -1");
  }
  if (!(opt.step > 0.0) || !(opt.nu > 0.0) || opt.max_points < 1) {
    throw std::invalid_argument("invalid continuation options");
  }
  const Vec4& S = opt.scale;
  const EquilibriumDetail d0 = evaluate(seed, v, sys);
  if (d0.residual.norm() > opt.nu) {
    throw std::invalid_argument("continuation seed is not an equilibrium");
  }

  ManifoldBranch br;
  br.v = v;
  br.orientation = opt.direction;
  Vec4 z = seed.to_vector().cwiseQuotient(S);
  Vec4 t = opt.direction * tangent(scaled(jacobian(seed, v, sys), S));
  br.points.push_back(make_point(seed, v, d0));
  br.tangents.push_back(t);
  br.arclength.push_back(0.0);

  while (static_cast<int>(br.points.size()) < opt.max_points) {
    double eps = opt.step;
    std::optional<NumericFailure> last_failure;
    std::optional<EquilibriumPoint> accepted;
    Vec4 t_new;
    while (eps >= opt.min_step) {
      const Vec4 pred = z + eps * t;
      try {
        EquilibriumPoint pt = newton_correct(pred.cwiseProduct(S), v, sys, opt);
        const Vec4 zc = pt.x.to_vector().cwiseQuotient(S);
        // Reject corrections that jump further than the predictor step: the
        // corrector has likely left the local piece of the branch.
        if ((zc - pred).norm() < eps) {
          t_new = tangent(scaled(jacobian(pt.x, v, sys), S), t);
          if (t_new.dot(t) > 0.0) {
            accepted = pt;
            break;
          }
        }
      } catch (const NumericError& e) {
        last_failure = e.kind();
      } catch (const std::invalid_argument&) {
        // Iterate left the slip domain (kappa <= -1).
      }
      eps /= 2;
    }
    if (!accepted) {
      if (last_failure == NumericFailure::kIllPosedModel) {
        br.termination = Termination::kWellPosednessBoundary;
      } else if (last_failure == NumericFailure::kSingularPoint) {
        br.termination = Termination::kSingularPoint;
      } else {
        br.termination = Termination::kStepUnderflow;
      }
      return br;
    }
    const EquilibriumUnknowns& x = accepted->x;
    if (std::abs(x.delta) > opt.max_abs_delta) {
      br.termination = Termination::kDeltaLimit;
      return br;
    }
    if (std::abs(x.kappa_r) > opt.max_abs_kappa) {
      br.termination = Termination::kKappaLimit;
      return br;
    }
    if (opt.stop_on_lateral_sign_change && opt.direction * x.a_lat < 0.0) {
      br.termination = Termination::kLateralSignChange;
      return br;
    }
    const Vec4 zn = x.to_vector().cwiseQuotient(S);
    if (!br.fold_index && opt.direction * t[0] > 0.0 &&
        opt.direction * t_new[0] <= 0.0) {
      const std::size_t prev = br.points.size() - 1;
      br.fold_index = opt.direction * x.a_lat >
                              opt.direction * br.points[prev].x.a_lat
                          ? prev + 1
                          : prev;
    }
    br.arclength.push_back(br.arclength.back() + (zn - z).norm());
    br.points.push_back(*accepted);
    br.tangents.push_back(t_new);
    z = zn;
    t = t_new;
  }
  br.termination = Termination::kMaxPoints;
  return br;
}

EquilibriumPoint solve_point(double v, double a_lat, const PointGuess& guess,
                             const EquilibriumSystem& sys,
                             const PointSolveOptions& opt) {
  require_speed(v);
  auto infeasible = [&](const std::string& why) {
    return NumericError(NumericFailure::kInfeasible,
                        "no equilibrium at v = " + std::to_string(v) +
                            " m/s, a_lat = " + std::to_string(a_lat) +
                            " m/s^2: " + why);
  };
  auto in_domain = [&](const Eigen::Vector3d& y) {
    return y.allFinite() && std::abs(y[1]) <= opt.max_abs_delta &&
           std::abs(y[2]) <= opt.max_abs_kappa && y[2] > -1.0;
  };
  auto unknowns = [&](const Eigen::Vector3d& y) {
    return EquilibriumUnknowns{a_lat, y[0], y[1], y[2]};
  };

  Eigen::Vector3d y(guess.beta, guess.delta, guess.kappa_r);
  if (!in_domain(y)) throw infeasible("initial guess outside the domain");
  try {
    EquilibriumDetail d = evaluate(unknowns(y), v, sys);
    for (int it = 0; it < opt.max_iterations; ++it) {
      const double norm = d.residual.norm();
      if (norm <= opt.nu) return make_point(unknowns(y), v, d);
      const Mat3 J = jacobian(unknowns(y), v, sys).rightCols<3>();
      const Eigen::FullPivLU<Mat3> lu(J);
      if (!lu.isInvertible()) throw infeasible("singular Jacobian");
      const Eigen::Vector3d dy = lu.solve(d.residual);
      // Backtrack on the residual norm; steps leaving the domain or the
      // well-posed region count as failures.
      double lambda = 1.0;
      bool improved = false;
      for (int k = 0; k < 30 && !improved; ++k, lambda /= 2) {
        const Eigen::Vector3d trial = y - lambda * dy;
        if (!in_domain(trial)) continue;
        try {
          EquilibriumDetail dt = evaluate(unknowns(trial), v, sys);
          if (dt.residual.norm() < norm) {
            y = trial;
            d = dt;
            improved = true;
          }
        } catch (const NumericError&) {
        }
      }
      if (!improved) throw infeasible("Newton step stalled");
    }
  } catch (const NumericError& e) {
    if (e.kind() == NumericFailure::kInfeasible) throw;
    throw infeasible(e.what());
  }
  throw infeasible("iteration budget exhausted");
}

double ackermann_gradient(double wheelbase, double v) {
  return wheelbase / (v * v);
}

std::vector<UndersteerSample> understeer_gradient(
    const std::vector<double>& a_lat, const std::vector<double>& delta,
    double v, double wheelbase) {
  if (a_lat.size() != delta.size() || a_lat.size() < 3) {
    throw std::invalid_argument(
        "understeer gradient needs at least three matched samples");
  }
  for (std::size_t i = 1; i < a_lat.size(); ++i) {
    if (!(a_lat[i] > a_lat[i - 1])) {
      throw std::invalid_argument(
          "understeer window is not monotone in lateral acceleration");
    }
  }
  const double ka = ackermann_gradient(wheelbase, v);
  std::vector<UndersteerSample> out;
  for (std::size_t i = 1; i + 1 < a_lat.size(); ++i) {
    const double slope =
        (delta[i + 1] - delta[i - 1]) / (a_lat[i + 1] - a_lat[i - 1]);
    out.push_back({a_lat[i], slope - ka});
  }
  return out;
}

std::vector<UndersteerSample> understeer_gradient(const ManifoldBranch& branch,
                                                  double wheelbase,
                                                  double a_lat_max) {
  const int o = branch.orientation;
  const std::size_t end = branch.fold_index.value_or(branch.points.size() - 1);
  std::vector<double> a, d;
  std::size_t i = 0;
  for (; i < branch.points.size(); ++i) {
    const double al = o * branch.points[i].x.a_lat;
    if (al > a_lat_max) break;
    a.push_back(al);
    d.push_back(o * branch.points[i].x.delta);
  }
  if (i >= end || i == branch.points.size()) {
    throw std::invalid_argument("understeer window reaches the fold");
  }
  // One point past the window so the last in-window sample is centered.
  a.push_back(o * branch.points[i].x.a_lat);
  d.push_back(o * branch.points[i].x.delta);
  std::vector<UndersteerSample> out =
      understeer_gradient(a, d, branch.v, wheelbase);
  if (o < 0) {
    for (auto& s : out) s.a_lat = -s.a_lat;
  }
  return out;
}

VehicleParams with_parameter(const VehicleParams& p, std::string_view name,
                             double value) {
  VehicleParams q = p;
  if (name == "b") {
    if (value == p.b) return q;
    q.a = p.wheelbase() - value;
    q.b = value;
  } else if (name == "h") {
    q.h = value;
  } else if (name == "m") {
    q.m = value;
  } else if (name == "I_zz") {
    q.I_zz = value;
  } else if (name == "I_xz") {
    q.I_xz = value;
  } else {
    throw std::invalid_argument("unknown sweep parameter '" +
                                std::string(name) +
                                "' (expected b, h, m, I_zz or I_xz)");
  }
  q.validate();
  return q;
}

std::vector<SweepEntry> sweep_parameter(std::string_view name,
                                        const std::vector<double>& values,
                                        double v, const EquilibriumSystem& sys,
                                        const ContinuationOptions& opt,
                                        int threads) {
  std::vector<SweepEntry> out(values.size());
  // Validate every value up front so a bad name fails the whole sweep.
  std::vector<EquilibriumSystem> systems;
  for (double value : values) {
    EquilibriumSystem s = sys;
    s.car.vehicle = with_parameter(sys.car.vehicle, name, value);
    systems.push_back(s);
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      out[i].value = values[i];
      try {
        out[i].branch = trace_branch({}, v, systems[i], opt);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const int n = std::clamp(threads, 1, static_cast<int>(values.size()));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace ltcar::manifold
