#include "ltcar/track.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ltcar::explore {

namespace {

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

// Longest interval handled by one Gauss-Legendre application.
constexpr double kQuadraturePiece = 5.0;

double segment_heading(const Segment& g, double h0, double u) {
  return h0 + g.k0 * u + 0.5 * (g.k1 - g.k0) * u * u / g.length;
}

// Displacement along a segment from its start to local arclength u.
Eigen::Vector2d segment_displacement(const Segment& g, double h0, double u) {
  Eigen::Vector2d d = Eigen::Vector2d::Zero();
  if (u <= 0.0) return d;
  const int pieces = std::max(1, static_cast<int>(std::ceil(u / kQuadraturePiece)));
  const double w = u / pieces;
  for (int p = 0; p < pieces; ++p) {
    const double mid = (p + 0.5) * w;
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
      const double th = segment_heading(g, h0, mid + 0.5 * w * kGlNodes[i]);
      d += 0.5 * w * kGlWeights[i] * Eigen::Vector2d(std::cos(th), std::sin(th));
    }
  }
  return d;
}

// Natural cubic spline second derivatives for values y over knots t.
std::vector<double> spline_moments(const std::vector<double>& t,
                                   const std::vector<double>& y) {
  const std::size_t n = t.size();
  std::vector<double> M(n, 0.0);
  if (n < 3) return M;
  const std::size_t m = n - 2;
  Eigen::VectorXd diag(m), upper(m), rhs(m);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
    diag[i - 1] = 2.0 * (h0 + h1);
    upper[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  // Thomas algorithm; the system is symmetric with sub-diagonal = upper.
  for (std::size_t i = 1; i < m; ++i) {
    const double f = upper[i - 1] / diag[i - 1];
    diag[i] -= f * upper[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  for (std::size_t i = m; i-- > 0;) {
    double r = rhs[i];
    if (i + 1 < m) r -= upper[i] * M[i + 2];
    M[i + 1] = r / diag[i];
  }
  return M;
}

struct CubicSpline {
  std::vector<double> t, y, M;

  // Value, first and second derivative at parameter s within interval i.
  std::array<double, 3> eval(std::size_t i, double s) const {
    const double h = t[i + 1] - t[i];
    const double A = (t[i + 1] - s) / h, B = (s - t[i]) / h;
    const double v = A * y[i] + B * y[i + 1] +
                     ((A * A * A - A) * M[i] + (B * B * B - B) * M[i + 1]) * h * h / 6.0;
    const double d1 = (y[i + 1] - y[i]) / h -
                      (3 * A * A - 1) / 6.0 * h * M[i] +
                      (3 * B * B - 1) / 6.0 * h * M[i + 1];
    const double d2 = A * M[i] + B * M[i + 1];
    return {v, d1, d2};
  }
};

}  // namespace

SegmentKind segment_kind_from_string(std::string_view name) {
  if (name == "straight") return SegmentKind::kStraight;
  if (name == "arc") return SegmentKind::kArc;
  if (name == "ramp") return SegmentKind::kRamp;
  throw std::invalid_argument("unknown segment type '" + std::string(name) +
                              "' (expected straight, arc or ramp)");
}

std::string_view to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::kStraight: return "straight";
    case SegmentKind::kArc: return "arc";
    case SegmentKind::kRamp: return "ramp";
  }
  return "unknown";
}

Segment Segment::straight(double length) {
  return {SegmentKind::kStraight, length, 0.0, 0.0};
}
Segment Segment::arc(double length, double curvature) {
  return {SegmentKind::kArc, length, curvature, curvature};
}
Segment Segment::ramp(double length, double k_start, double k_end) {
  return {SegmentKind::kRamp, length, k_start, k_end};
}

PathSpec::PathSpec(Pose2 start, std::vector<Segment> segments, double tol)
    : start_(start), segments_(std::move(segments)) {
  if (segments_.empty()) throw std::invalid_argument("path has no segments");
  if (!std::isfinite(start_.x) || !std::isfinite(start_.y) ||
      !std::isfinite(start_.heading)) {
    throw std::invalid_argument("path start pose must be finite");
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& g = segments_[i];
    if (!(g.length > 0.0) || !std::isfinite(g.length) ||
        !std::isfinite(g.k0) || !std::isfinite(g.k1)) {
      throw std::invalid_argument("segment " + std::to_string(i) +
                                  " needs a positive length and finite curvature");
    }
    if ((g.kind == SegmentKind::kStraight && (g.k0 != 0.0 || g.k1 != 0.0)) ||
        (g.kind == SegmentKind::kArc && g.k0 != g.k1)) {
      throw std::invalid_argument("segment " + std::to_string(i) +
                                  " curvature does not match its type");
    }
    if (i > 0 && std::abs(segments_[i - 1].k1 - g.k0) > tol) {
      throw std::invalid_argument("curvature jumps between segments " +
                                  std::to_string(i - 1) + " and " +
                                  std::to_string(i));
    }
  }
  Pose2 p = start_;
  double s = 0.0;
  for (const Segment& g : segments_) {
    offsets_.push_back(s);
    anchors_.push_back(p);
    const Eigen::Vector2d d = segment_displacement(g, p.heading, g.length);
    p = {p.x + d.x(), p.y + d.y(), segment_heading(g, p.heading, g.length)};
    s += g.length;
  }
  total_ = s;
}

std::size_t PathSpec::locate(double s, double& local) const {
  s = std::clamp(s, 0.0, total_);
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  local = std::min(s - offsets_[i], segments_[i].length);
  return i;
}

double PathSpec::curvature(double s) const {
  double u;
  const Segment& g = segments_[locate(s, u)];
  return g.k0 + (g.k1 - g.k0) * u / g.length;
}

double PathSpec::heading(double s) const {
  double u;
  const std::size_t i = locate(s, u);
  return segment_heading(segments_[i], anchors_[i].heading, u);
}

Pose2 PathSpec::pose(double s) const {
  double u;
  const std::size_t i = locate(s, u);
  const Segment& g = segments_[i];
  const Eigen::Vector2d d = segment_displacement(g, anchors_[i].heading, u);
  return {anchors_[i].x + d.x(), anchors_[i].y + d.y(),
          segment_heading(g, anchors_[i].heading, u)};
}

PathSpec fit_waypoints(const std::vector<Eigen::Vector2d>& points,
                       double max_piece) {
  if (points.size() < 3) {
    throw std::invalid_argument("waypoint fit needs at least three points");
  }
  if (!(max_piece > 0.0)) {
    throw std::invalid_argument("waypoint piece length must be positive");
  }
  const std::size_t n = points.size();
  std::vector<double> t(n, 0.0), xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!points[i].allFinite()) {
      throw std::invalid_argument("waypoints must be finite");
    }
    xs[i] = points[i].x();
    ys[i] = points[i].y();
    if (i > 0) {
      const double chord = (points[i] - points[i - 1]).norm();
      if (!(chord > 0.0)) {
        throw std::invalid_argument("consecutive waypoints coincide at index " +
                                    std::to_string(i));
      }
      t[i] = t[i - 1] + chord;
    }
  }
  const CubicSpline sx{t, xs, spline_moments(t, xs)};
  const CubicSpline sy{t, ys, spline_moments(t, ys)};

  // Curvature and arclength sampled on a fine parameter grid.
  std::vector<double> arc{0.0}, curv;
  auto curvature_at = [&](std::size_t i, double p) {
    const auto X = sx.eval(i, p), Y = sy.eval(i, p);
    const double sp = std::hypot(X[1], Y[1]);
    return (X[1] * Y[2] - Y[1] * X[2]) / (sp * sp * sp);
  };
  auto speed_at = [&](std::size_t i, double p) {
    return std::hypot(sx.eval(i, p)[1], sy.eval(i, p)[1]);
  };
  curv.push_back(curvature_at(0, t[0]));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = t[i + 1] - t[i];
    const int pieces = std::max(1, static_cast<int>(std::ceil(h / max_piece)));
    for (int p = 0; p < pieces; ++p) {
      const double a = t[i] + h * p / pieces, b = t[i] + h * (p + 1) / pieces;
      double len = 0.0;
      for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
        len += 0.5 * (b - a) * kGlWeights[q] *
               speed_at(i, 0.5 * (a + b) + 0.5 * (b - a) * kGlNodes[q]);
      }
      arc.push_back(arc.back() + len);
      curv.push_back(curvature_at(i, b));
    }
  }
  std::vector<Segment> segs;
  for (std::size_t j = 0; j + 1 < arc.size(); ++j) {
    segs.push_back(Segment::ramp(arc[j + 1] - arc[j], curv[j], curv[j + 1]));
  }
  const auto X0 = sx.eval(0, t[0]), Y0 = sy.eval(0, t[0]);
  return PathSpec({xs[0], ys[0], std::atan2(Y0[1], X0[1])}, std::move(segs));
}

SpeedProfile::SpeedProfile(std::vector<double> s, std::vector<double> v,
                           double v_min)
    : s_(std::move(s)), v_(std::move(v)) {
  if (s_.empty() || s_.size() != v_.size()) {
    throw std::invalid_argument("speed profile needs matching knot lists");
  }
  if (s_.front() != 0.0) {
    throw std::invalid_argument("speed profile must start at s = 0");
  }
  for (std::size_t i = 0; i < s_.size(); ++i) {
    if (!std::isfinite(s_[i]) || !(v_[i] >= v_min) || !std::isfinite(v_[i])) {
      throw std::invalid_argument("speed profile knot " + std::to_string(i) +
                                  " must be finite with v >= " +
                                  std::to_string(v_min) + " m/s");
    }
    if (i > 0 && !(s_[i] > s_[i - 1])) {
      throw std::invalid_argument("speed profile arclengths must increase");
    }
  }
}

SpeedProfile SpeedProfile::constant(double v) { return SpeedProfile({0.0}, {v}); }

double SpeedProfile::at(double s) const {
  if (s <= s_.front()) return v_.front();
  if (s >= s_.back()) return v_.back();
  const auto it = std::upper_bound(s_.begin(), s_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - s_.begin());
  const double f = (s - s_[i - 1]) / (s_[i] - s_[i - 1]);
  return v_[i - 1] + f * (v_[i] - v_[i - 1]);
}

double SpeedProfile::mean(double L) const {
  if (!(L > 0.0)) throw std::invalid_argument("mean over a non-positive length");
  // Exact for a piecewise-linear function: trapezoids between breakpoints.
  std::vector<double> pts{0.0};
  for (double s : s_) {
    if (s > 0.0 && s < L) pts.push_back(s);
  }
  pts.push_back(L);
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    area += 0.5 * (at(pts[i]) + at(pts[i + 1])) * (pts[i + 1] - pts[i]);
  }
  return area / L;
}

SpeedProfile SpeedProfile::scaled_deviation(double factor, double L) const {
  const double vm = mean(L);
  std::vector<double> v(v_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = vm + factor * (v_[i] - vm);
  return SpeedProfile(s_, std::move(v));
}

SpeedProfile SpeedProfile::scaled(double factor) const {
  std::vector<double> v(v_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = factor * v_[i];
  return SpeedProfile(s_, std::move(v));
}

PathSamples path_to_pose(const PathSpec& path, const SpeedProfile& profile,
                         double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const double L = path.length();
  PathSamples out;
  out.dt = dt;
  double s = 0.0;
  auto rate = [&](double q) {
    const double v = profile.at(q);
    if (!(v > 0.0)) throw std::invalid_argument("speed profile must be positive");
    return v;
  };
  while (true) {
    const Pose2 p = path.pose(s);
    out.s.push_back(s);
    out.x.push_back(p.x);
    out.y.push_back(p.y);
    out.heading.push_back(p.heading);
    out.sigma.push_back(path.curvature(s));
    out.v.push_back(rate(s));
    const double k1 = rate(s);
    const double k2 = rate(s + 0.5 * dt * k1);
    const double k3 = rate(s + 0.5 * dt * k2);
    const double k4 = rate(s + dt * k3);
    const double next = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (next > L + 1e-12 * std::max(1.0, L)) break;
    s = std::min(next, L);
  }
  return out;
}

PathSpec chicane_track() {
  const double k = 1.0 / 50.0;
  return PathSpec({0.0, 0.0, 0.0},
                  {Segment::straight(100.0), Segment::ramp(30.0, 0.0, k),
                   Segment::arc(60.0, k), Segment::ramp(60.0, k, -k),
                   Segment::arc(60.0, -k), Segment::ramp(30.0, -k, 0.0),
                   Segment::straight(160.0)});
}

SpeedProfile chicane_speed() {
  return SpeedProfile({0.0, 70.0, 130.0, 220.0, 310.0, 400.0, 500.0},
                      {28.0, 28.0, 20.0, 22.0, 20.0, 28.0, 28.0});
}

namespace {

constexpr double kLoopWide = 1.0 / 120.0;
constexpr double kLoopTight = 1.0 / 55.0;
constexpr double kLoopRamp = 20.0;

// Arc length that completes a turn of the given angle between two ramps.
double arc_for_turn(double angle, double k) {
  return (angle - k * kLoopRamp) / k;
}

}  // namespace

PathSpec loop_track() {
  const double pi = std::numbers::pi;
  return PathSpec(
      {0.0, 0.0, 0.0},
      {Segment::straight(80.0), Segment::ramp(kLoopRamp, 0.0, kLoopWide),
       Segment::arc(arc_for_turn(pi / 2, kLoopWide), kLoopWide),
       Segment::ramp(kLoopRamp, kLoopWide, 0.0), Segment::straight(100.0),
       Segment::ramp(kLoopRamp, 0.0, kLoopTight),
       Segment::arc(arc_for_turn(pi, kLoopTight), kLoopTight),
       Segment::ramp(kLoopRamp, kLoopTight, 0.0), Segment::straight(80.0)});
}

std::pair<double, double> loop_tight_turn() {
  const PathSpec p = loop_track();
  double s = 0.0;
  for (std::size_t i = 0; i < 5; ++i) s += p.segments()[i].length;
  double e = s;
  for (std::size_t i = 5; i < 8; ++i) e += p.segments()[i].length;
  return {s, e};
}

}  // namespace ltcar::explore
