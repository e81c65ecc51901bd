#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ltcar/explore.hpp"
#include "ltcar/manifold.hpp"
#include "ltcar/track.hpp"
#include "ltcar/trajopt.hpp"

namespace ltcar::app {

struct TireSweepConfig {
  std::vector<double> kappa;
  std::vector<double> beta;             // [rad]
  std::vector<double> loads;            // normal load magnitudes [N]
  std::vector<double> ellipse_beta;     // sideslips of the combined-slip sweep
  std::string axle = "rear";
  bool linear_overlay = false;
};

struct ParameterSweepConfig {
  std::string parameter;
  std::vector<double> values;
  double v = 30.0;
};

struct EquilibriaConfig {
  std::vector<double> speeds;
  std::optional<ParameterSweepConfig> sweep;
  double a_lat_understeer = 3.0;  // upper end of the K_us window
};

enum class InputSource { kConstant, kRamp, kFile };

struct SimulateConfig {
  Vec6 initial_state;
  double duration = 5.0;
  InputSource source = InputSource::kConstant;
  Vec3 start = Vec3::Zero();  // constant value, or ramp value at t = 0
  Vec3 rate = Vec3::Zero();   // ramp slope per second
  std::string input_file;
};

enum class Scenario { kChicane, kLoop, kTrack, kExternal };
enum class ScheduleKind { kAggressiveness, kSpeed, kScale };

std::string_view to_string(Scenario s);
std::string_view to_string(ScheduleKind k);

struct ExploreConfig {
  Scenario scenario = Scenario::kChicane;
  explore::PathSpec track;       // kTrack only
  explore::SpeedProfile speed;   // kTrack only
  ScheduleKind schedule_kind = ScheduleKind::kAggressiveness;
  std::vector<double> schedule;
  bool bicycle_comparison = false;
  std::string external_file;     // kExternal only
  /// Standard deviation of seeded position noise added to an external curve
  /// before use [m]; zero disables it.
  double perturb_position = 0.0;
};

/// Everything a run needs, resolved from one JSON document plus overrides.
/// Numbers are SI throughout.
struct RunConfig {
  std::string preset = "sports";
  CarModel car;
  trajopt::DynamicsModel model = trajopt::DynamicsModel::kLtCar;

  double dt = 0.01;
  trajopt::Weights weights;
  trajopt::NewtonOptions newton;
  manifold::ContinuationOptions continuation;
  manifold::PointSolveOptions point;

  TireSweepConfig tire;
  EquilibriaConfig equilibria;
  SimulateConfig simulate;
  ExploreConfig explore;

  std::string output_dir = "ltcar_out";
  int threads = 1;
  std::uint64_t seed = 0;

  /// Canonical JSON of the settings that determine results (everything but
  /// the output directory and thread count), and its FNV-1a hash.
  std::string canonical;
  std::string hash;

  manifold::LoadModel load_model() const {
    return model == trajopt::DynamicsModel::kBicycle
               ? manifold::LoadModel::kStatic
               : manifold::LoadModel::kLoadTransfer;
  }
};

/// Parses a configuration document. `overrides` are "dotted.key=value"
/// strings applied before validation; values are JSON when they parse as
/// JSON and strings otherwise. Relative file names inside the document are
/// resolved against `base_dir`. Throws ConfigError naming the line and
/// column of syntax errors or the dotted path of the offending field.
RunConfig parse_config(const std::string& text, const std::string& origin,
                       const std::vector<std::string>& overrides = {},
                       const std::string& base_dir = ".");

/// Reads and parses a file; throws IoError when it cannot be read.
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});

/// Track document: {"start": {"x", "y", "heading"}, "segments": [{"type":
/// "straight" | "arc" | "ramp", "length", "curvature" | "curvature_start",
/// "curvature_end"}]} or {"waypoints": [[x, y], ...], "max_piece"}.
explore::PathSpec parse_track(const std::string& text, const std::string& origin);

}  // namespace ltcar::app
