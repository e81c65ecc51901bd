#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "ltcar/errors.hpp"
#include "ltcar/trajopt.hpp"

namespace ltcar::trajopt {

namespace {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

double stage_weight(std::size_t k, std::size_t n, double dt) {
  return (k == 0 || k + 1 == n) ? 0.5 * dt : dt;
}

struct Residuals {
  std::vector<Vec6> q;  // Q (x - x_d)
  std::vector<Vec3> r;  // R (u - u_d)
  Vec6 p;               // P1 (x_N - x_d,N)
};

Residuals residuals(const Trajectory& traj, const Curve& desired,
                    const Weights& w) {
  if (traj.size() != desired.size() || traj.dt() != desired.dt) {
    throw std::invalid_argument("desired curve is on a different grid");
  }
  Residuals res;
  const std::size_t n = traj.size();
  res.q.resize(n);
  res.r.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    res.q[k] = w.Q * (traj.x(k) - desired.x[k]);
    res.r[k] = w.R * (traj.u(k) - desired.u[k]);
  }
  res.p = w.P1 * (traj.x(n - 1) - desired.x[n - 1]);
  return res;
}

// Hessian of y -> rho' Phi(y) with y = (x, u), by central second differences.
Mat9 step_curvature(const Plant& plant, const Vec6& x, const Vec3& u,
                    double dt, const Vec6& rho) {
  Vec9 y0;
  y0 << x, u;
  auto h = [&](const Vec9& y) {
    return rho.dot(rk4_step(plant, y.head<6>(), y.tail<3>(), dt));
  };
  Vec9 e;
  for (int i = 0; i < 9; ++i) e[i] = 1e-4 * std::max(1.0, std::abs(y0[i]));
  const double h0 = h(y0);
  Mat9 H;
  for (int i = 0; i < 9; ++i) {
    Vec9 yp = y0, ym = y0;
    yp[i] += e[i];
    ym[i] -= e[i];
    H(i, i) = (h(yp) - 2 * h0 + h(ym)) / (e[i] * e[i]);
    for (int j = 0; j < i; ++j) {
      Vec9 ypp = yp, ypm = yp, ymp = ym, ymm = ym;
      ypp[j] += e[j];
      ypm[j] -= e[j];
      ymp[j] += e[j];
      ymm[j] -= e[j];
      H(i, j) = H(j, i) =
          (h(ypp) - h(ypm) - h(ymp) + h(ymm)) / (4 * e[i] * e[j]);
    }
  }
  return H;
}

// Restricts an input-space quadratic to the active inputs: inactive rows and
// columns become identity/zero so their perturbation solves to zero.
void mask_inputs(const Weights& w, Mat3& Quu, Mat36& Qux, Vec3& Qu) {
  for (int j = 0; j < 3; ++j) {
    if (w.active[j]) continue;
    Quu.row(j).setZero();
    Quu.col(j).setZero();
    Quu(j, j) = 1.0;
    Qux.row(j).setZero();
    Qu[j] = 0.0;
  }
}

// Returns false when a stage input Hessian is not positive definite.
bool solve_lq(const Trajectory& traj, const Weights& w,
              const Linearization& lin, const Residuals& res,
              const std::vector<Mat9>* curvature, Direction& dir) {
  const std::size_t n = traj.size();
  const double dt = traj.dt();
  std::vector<Mat36> L(n);
  std::vector<Vec3> l(n);

  const double wN = stage_weight(n - 1, n, dt);
  {
    Mat3 Quu = wN * w.R;
    Mat36 Qux = Mat36::Zero();
    Vec3 Qu = wN * res.r[n - 1];
    mask_inputs(w, Quu, Qux, Qu);
    l[n - 1] = -Quu.ldlt().solve(Qu);
    L[n - 1].setZero();
  }
  Mat6 S = wN * w.Q + w.P1;
  Vec6 s = wN * res.q[n - 1] + res.p;
  for (std::size_t k = n - 1; k-- > 0;) {
    const double wk = stage_weight(k, n, dt);
    const Mat6& A = lin.A[k];
    const Mat63& B = lin.B[k];
    Mat6 Qxx = wk * w.Q + A.transpose() * S * A;
    Mat3 Quu = wk * w.R + B.transpose() * S * B;
    Mat36 Qux = B.transpose() * S * A;
    if (curvature) {
      const Mat9& H = (*curvature)[k];
      Qxx += H.topLeftCorner<6, 6>();
      Quu += H.bottomRightCorner<3, 3>();
      Qux += H.bottomLeftCorner<3, 6>();
    }
    const Vec6 Qx = wk * res.q[k] + A.transpose() * s;
    Vec3 Qu = wk * res.r[k] + B.transpose() * s;
    mask_inputs(w, Quu, Qux, Qu);
    const Eigen::LLT<Mat3> llt(Quu);
    if (llt.info() != Eigen::Success) return false;
    L[k] = -llt.solve(Qux);
    l[k] = -llt.solve(Qu);
    S = Qxx + Qux.transpose() * L[k];
    S = 0.5 * (S + S.transpose()).eval();
    s = Qx + Qux.transpose() * l[k];
  }

  dir.z.assign(n, Vec6::Zero());
  dir.v.assign(n, Vec3::Zero());
  double slope = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    dir.v[k] = l[k] + L[k] * dir.z[k];
    const double wk = stage_weight(k, n, dt);
    slope += wk * (res.q[k].dot(dir.z[k]) + res.r[k].dot(dir.v[k]));
    if (k + 1 < n) dir.z[k + 1] = lin.A[k] * dir.z[k] + lin.B[k] * dir.v[k];
  }
  dir.slope = slope + res.p.dot(dir.z[n - 1]);
  return true;
}

}  // namespace

std::vector<Vec6> propagate_tangent(const Linearization& lin,
                                    const std::vector<Vec3>& v) {
  if (v.size() != lin.A.size() + 1) {
    throw std::invalid_argument("perturbation length does not match the grid");
  }
  std::vector<Vec6> z(v.size(), Vec6::Zero());
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    z[k + 1] = lin.A[k] * z[k] + lin.B[k] * v[k];
  }
  return z;
}

double directional_derivative(const Trajectory& traj, const Curve& desired,
                              const Weights& w, const Linearization& lin,
                              const std::vector<Vec3>& v) {
  const Residuals res = residuals(traj, desired, w);
  const std::size_t n = traj.size();
  if (v.size() != n || lin.A.size() + 1 != n) {
    throw std::invalid_argument("perturbation length does not match the grid");
  }
  const double dt = traj.dt();
  Vec6 lambda = stage_weight(n - 1, n, dt) * res.q[n - 1] + res.p;
  double slope = stage_weight(n - 1, n, dt) * res.r[n - 1].dot(v[n - 1]);
  for (std::size_t k = n - 1; k-- > 0;) {
    const double wk = stage_weight(k, n, dt);
    slope += (wk * res.r[k] + lin.B[k].transpose() * lambda).dot(v[k]);
    lambda = wk * res.q[k] + lin.A[k].transpose() * lambda;
  }
  return slope;
}

Direction descent_direction(const Trajectory& traj, const Curve& desired,
                            const GainSchedule& K, const Weights& w,
                            const Plant& plant, const Linearization& lin,
                            HessianMode mode) {
  const Residuals res = residuals(traj, desired, w);
  const std::size_t n = traj.size();
  if (K.size() != n || lin.A.size() + 1 != n) {
    throw std::invalid_argument("gain or linearization length mismatch");
  }
  Direction dir;
  if (mode == HessianMode::kNewton && n > 1) {
    // Closed-loop adjoint of the projection's second variation.
    const double dt = traj.dt();
    std::vector<Vec6> rho(n);
    rho[n - 1] = stage_weight(n - 1, n, dt) *
                     (res.q[n - 1] - K[n - 1].transpose() * res.r[n - 1]) +
                 res.p;
    for (std::size_t k = n - 1; k-- > 0;) {
      const Mat6 Acl = lin.A[k] - lin.B[k] * K[k];
      rho[k] = stage_weight(k, n, dt) * (res.q[k] - K[k].transpose() * res.r[k]) +
               Acl.transpose() * rho[k + 1];
    }
    std::vector<Mat9> curvature(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      curvature[k] =
          step_curvature(plant, traj.x(k), traj.u(k), dt, rho[k + 1]);
    }
    if (solve_lq(traj, w, lin, res, &curvature, dir) && dir.slope < 0.0) {
      return dir;
    }
    dir = Direction{};
    dir.gauss_newton_fallback = true;
  }
  if (!solve_lq(traj, w, lin, res, nullptr, dir)) {
    throw NumericError(NumericFailure::kNoConvergence,
                       "Gauss-Newton subproblem is not positive definite");
  }
  return dir;
}

LineSearchResult line_search(const Trajectory& traj, const Direction& dir,
                             const Curve& desired, const GainSchedule& K,
                             const Weights& w, const Plant& plant,
                             double current_cost,
                             const LineSearchOptions& opt) {
  LineSearchResult out;
  if (!(dir.slope < 0.0)) return out;
  double gamma = 1.0;
  for (int i = 0; i <= opt.max_halvings; ++i, gamma /= 2) {
    Curve trial = traj.curve();
    for (std::size_t k = 0; k < trial.size(); ++k) {
      trial.x[k] += gamma * dir.z[k];
      trial.u[k] += gamma * dir.v[k];
    }
    try {
      Trajectory next = project(trial, K, plant);
      const double g = cost(next.curve(), desired, w);
      if (std::isfinite(g) &&
          g <= current_cost + opt.sigma * gamma * dir.slope) {
        out.gamma = gamma;
        out.cost = g;
        out.next = std::move(next);
        return out;
      }
    } catch (const NumericError&) {
      // A step that leaves the well-posed region counts as a rejection.
    }
  }
  return out;
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::kConverged: return "converged";
    case StopReason::kMaxIterations: return "max-iterations";
    case StopReason::kLineSearchStall: return "line-search-stall";
  }
  return "unknown";
}

NewtonResult po_newton(const Trajectory& xi0, const Curve& desired,
                       const Weights& w, const Plant& plant,
                       const NewtonOptions& opt) {
  w.validate();
  NewtonResult result{xi0, {}, StopReason::kMaxIterations, false};
  double g = cost(xi0.curve(), desired, w);
  for (int iter = 0;; ++iter) {
    try {
      const Linearization lin = linearize_trajectory(result.trajectory, plant);
      const GainSchedule K =
          opt.gain == GainDesign::kSampled
              ? sampled_gain(lin, w, result.trajectory.dt())
              : design_gain(result.trajectory, w, plant, opt.gain);
      const Direction dir = descent_direction(result.trajectory, desired, K, w,
                                              plant, lin, opt.mode);
      result.used_fallback |= dir.gauss_newton_fallback;
      result.log.push_back({iter, g, dir.slope, 0.0});
      if (std::abs(dir.slope) <= opt.grad_tol * (1.0 + g)) {
        result.reason = StopReason::kConverged;
        return result;
      }
      if (iter >= opt.max_iter) {
        result.reason = StopReason::kMaxIterations;
        return result;
      }
      LineSearchResult ls = line_search(result.trajectory, dir, desired, K, w,
                                        plant, g, opt.line_search);
      if (!ls.next) {
        result.reason = StopReason::kLineSearchStall;
        return result;
      }
      result.log.back().gamma = ls.gamma;
      result.trajectory = std::move(*ls.next);
      g = ls.cost;
    } catch (const NumericError& e) {
      throw NumericError(e.kind(),
                         "iterate " + std::to_string(iter) + ": " + e.detail(),
                         e.time());
    }
  }
}

}  // namespace ltcar::trajopt
