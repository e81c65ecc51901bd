#pragma once

#include <Eigen/Core>
#include <string_view>
#include <vector>

namespace ltcar::explore {

enum class SegmentKind { kStraight, kArc, kRamp };

SegmentKind segment_kind_from_string(std::string_view name);
std::string_view to_string(SegmentKind k);

/// Piece of a curvature profile; curvature varies linearly from k0 to k1
/// over the segment (constant for arcs, zero for straights).
struct Segment {
  SegmentKind kind = SegmentKind::kStraight;
  double length = 0.0;  // [m]
  double k0 = 0.0;      // curvature at the start [1/m]
  double k1 = 0.0;      // curvature at the end [1/m]

  static Segment straight(double length);
  static Segment arc(double length, double curvature);
  static Segment ramp(double length, double k_start, double k_end);
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // [rad], positive turning towards +y
};

/// Path given by its start pose and a piecewise-linear curvature profile.
class PathSpec {
 public:
  PathSpec() = default;
  /// Throws std::invalid_argument on an empty or non-positive-length
  /// segment list, non-finite values or a curvature jump above tol between
  /// consecutive segments.
  PathSpec(Pose2 start, std::vector<Segment> segments, double tol = 1e-9);

  const Pose2& start() const { return start_; }
  const std::vector<Segment>& segments() const { return segments_; }
  double length() const { return total_; }

  /// Curvature, heading and pose at arclength s, clamped to [0, L].
  double curvature(double s) const;
  double heading(double s) const;
  Pose2 pose(double s) const;

 private:
  std::size_t locate(double s, double& local) const;

  Pose2 start_;
  std::vector<Segment> segments_;
  std::vector<double> offsets_;  // arclength at each segment start
  std::vector<Pose2> anchors_;   // pose at each segment start
  double total_ = 0.0;
};

/// Natural cubic spline through the waypoints (chord-length parameter),
/// resampled as linear-curvature ramps no longer than max_piece.
PathSpec fit_waypoints(const std::vector<Eigen::Vector2d>& points,
                       double max_piece = 2.0);

/// Piecewise-linear speed over arclength, v_d(s) > 0.
class SpeedProfile {
 public:
  SpeedProfile() = default;
  /// Knots must have strictly increasing s starting at 0 and speeds of at
  /// least v_min; throws std::invalid_argument otherwise.
  SpeedProfile(std::vector<double> s, std::vector<double> v,
               double v_min = 1.0);
  static SpeedProfile constant(double v);

  double at(double s) const;
  /// Arclength average over [0, L].
  double mean(double L) const;
  /// v_mean + factor (v - v_mean), with the mean taken over [0, L].
  SpeedProfile scaled_deviation(double factor, double L) const;
  /// factor * v.
  SpeedProfile scaled(double factor) const;

  const std::vector<double>& knots_s() const { return s_; }
  const std::vector<double>& knots_v() const { return v_; }

 private:
  std::vector<double> s_;
  std::vector<double> v_;
};

/// The path sampled on the time grid that ds/dt = v_d(s) induces.
struct PathSamples {
  double dt = 0.01;
  std::vector<double> s, x, y, heading, sigma, v;

  std::size_t size() const { return s.size(); }
};

/// Samples up to the last grid time with s <= L. Throws
/// std::invalid_argument for dt <= 0 or a profile that is not positive.
PathSamples path_to_pose(const PathSpec& path, const SpeedProfile& profile,
                         double dt);

/// Two opposing arcs joined by linear-curvature transitions, about 500 m,
/// with a speed profile that slows into each arc.
PathSpec chicane_track();
SpeedProfile chicane_speed();

/// Open course: a 90 degree wide turn, a back straight and a tight 180 degree
/// final turn of radius 55 m, where 30 m/s exceeds the tire-limited
/// equilibrium and 29 m/s does not.
PathSpec loop_track();
/// Arclength interval of the loop's tight turn, including its transitions.
std::pair<double, double> loop_tight_turn();

}  // namespace ltcar::explore
