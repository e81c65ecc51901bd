#include <gtest/gtest.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "ltcar/config.hpp"
#include "ltcar/errors.hpp"
#include "ltcar/params.hpp"

namespace ltcar::app {
namespace {

namespace fs = std::filesystem;

std::string config_error(const std::string& text, const std::vector<std::string>& sets = {}) {
  try {
    parse_config(text, "cfg.json", sets);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, EmptyDocumentGivesDefaults) {
  const RunConfig c = parse_config("", "<defaults>");
  EXPECT_EQ(c.preset, "sports");
  EXPECT_EQ(c.model, trajopt::DynamicsModel::kLtCar);
  EXPECT_EQ(c.load_model(), manifold::LoadModel::kLoadTransfer);
  EXPECT_DOUBLE_EQ(c.dt, 0.01);
  EXPECT_EQ(c.car.vehicle.m, car_preset("sports").vehicle.m);
  EXPECT_EQ(c.equilibria.speeds, (std::vector<double>{20, 30, 40}));
  EXPECT_EQ(c.tire.kappa.size(), 201u);
  EXPECT_EQ(c.tire.loads, (std::vector<double>{2000, 4000, 6000}));
  EXPECT_EQ(c.explore.scenario, Scenario::kChicane);
  EXPECT_EQ(c.explore.schedule, explore::aggressiveness_schedule());
  EXPECT_EQ(c.simulate.source, InputSource::kConstant);
  EXPECT_EQ(c.output_dir, "ltcar_out");
  EXPECT_EQ(c.threads, 1);
  EXPECT_EQ(c.hash.size(), 16u);
}

TEST(Config, SyntheticScenariosUseRearOnlyWeights) {
  const RunConfig c = parse_config("", "<defaults>");
  EXPECT_FALSE(c.weights.active[2]);
  EXPECT_DOUBLE_EQ(c.weights.R_K(1, 1), 1.0);
}

TEST(Config, LoopDefaultsToTheSpeedRamp) {
  const RunConfig c = parse_config(R"({"explore": {"scenario": "loop"}})", "cfg");
  EXPECT_EQ(c.explore.schedule_kind, ScheduleKind::kSpeed);
  EXPECT_EQ(c.explore.schedule, explore::speed_schedule());
}

TEST(Config, InlineVehicleOverridesThePreset) {
  const RunConfig c = parse_config(
      R"({"vehicle": {"preset": "sports", "params": {"b": 2.1, "h": 0.4},
                       "rear_tire": {"d_x": 1.1}}, "model": "bicycle"})",
      "cfg");
  EXPECT_DOUBLE_EQ(c.car.vehicle.b, 2.1);
  EXPECT_DOUBLE_EQ(c.car.vehicle.h, 0.4);
  EXPECT_DOUBLE_EQ(c.car.tires.rear.params.d_x, 1.1);
  EXPECT_EQ(c.load_model(), manifold::LoadModel::kStatic);
}

TEST(Config, OverridesApplyBeforeValidation) {
  const RunConfig c = parse_config(R"({"solver": {"dt": 0.02}})", "cfg",
                                   {"solver.dt=0.005", "equilibria.speeds=[25]",
                                    "vehicle.params.m=1200", "tire.axle=front"});
  EXPECT_DOUBLE_EQ(c.dt, 0.005);
  EXPECT_EQ(c.equilibria.speeds, (std::vector<double>{25}));
  EXPECT_DOUBLE_EQ(c.car.vehicle.m, 1200.0);
  EXPECT_EQ(c.tire.axle, "front");
}

TEST(Config, UnknownKeysNameTheirPath) {
  EXPECT_EQ(config_error(R"({"solver": {"line_search": {"sigmaa": 0.3}}})"),
            "solver.line_search.sigmaa: unknown setting");
  EXPECT_EQ(config_error(R"({"colour": 1})"), "colour: unknown setting");
}

TEST(Config, SyntaxErrorsGiveLineAndColumn) {
  const std::string msg = config_error("{\n  \"solver\": {\n    \"dt\": 0.01,\n  }\n}");
  EXPECT_EQ(msg.rfind("cfg.json:4:", 0), 0u) << msg;
}

TEST(Config, RangeAndTypeErrors) {
  EXPECT_NE(config_error(R"({"solver": {"dt": 0}})").find("solver.dt: must be in (0"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"threads": 0})").find("threads: must be in"), std::string::npos);
  EXPECT_NE(config_error(R"({"solver": {"max_iter": 2.5}})").find("must be an integer"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"tire": {"kappa": [-1.0]}})").find("tire.kappa"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"vehicle": "truck"})").find("unknown parameter set 'truck'"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"model": "quad"})").find("model"), std::string::npos);
  EXPECT_NE(config_error(R"({"seed": -3})").find("seed"), std::string::npos);
  EXPECT_NE(config_error(R"({"vehicle": {"params": {"m": -1}}})").find("vehicle.params.m"),
            std::string::npos);
}

TEST(Config, ScenarioConsistencyIsChecked) {
  EXPECT_NE(config_error(R"({"explore": {"scenario": "track"}})").find("explore.track"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"explore": {"scenario": "loop",
                                          "schedule": {"kind": "aggressiveness"}}})")
                .find("explore.schedule.kind"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"explore": {"scenario": "external"}})").find("explore.file"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"explore": {"perturb_position": 0.1}})").find("perturb_position"),
            std::string::npos);
}

TEST(Config, GridsAcceptRanges) {
  const RunConfig c = parse_config(
      R"({"tire": {"kappa": {"from": -0.2, "to": 0.2, "count": 5}}})", "cfg");
  ASSERT_EQ(c.tire.kappa.size(), 5u);
  EXPECT_DOUBLE_EQ(c.tire.kappa.front(), -0.2);
  EXPECT_DOUBLE_EQ(c.tire.kappa[2], 0.0);
  EXPECT_DOUBLE_EQ(c.tire.kappa.back(), 0.2);
}

TEST(Config, SimulateNeedsExactlyOneInputSource) {
  EXPECT_NE(config_error(R"({"simulate": {"inputs": {}}})").find("simulate.inputs"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"simulate": {"inputs": {"constant": [0, 0, 0],
                                                     "ramp": {"start": [0, 0, 0]}}}})")
                .find("exactly one"),
            std::string::npos);
  const RunConfig c = parse_config(
      R"({"simulate": {"inputs": {"ramp": {"start": [0.01, 0, 0], "rate": [0, 0.1, 0]}}}})",
      "cfg");
  EXPECT_EQ(c.simulate.source, InputSource::kRamp);
  EXPECT_DOUBLE_EQ(c.simulate.start[0], 0.01);
  EXPECT_DOUBLE_EQ(c.simulate.rate[1], 0.1);
}

TEST(Config, HashIgnoresOutputAndThreads) {
  const RunConfig a = parse_config(R"({"output": {"dir": "a"}, "threads": 1})", "cfg");
  const RunConfig b = parse_config(R"({"output": {"dir": "b"}, "threads": 8})", "cfg");
  const RunConfig c = parse_config(R"({"seed": 5})", "cfg");
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_EQ(a.output_dir, "a");
  EXPECT_EQ(b.threads, 8);
  EXPECT_NE(a.hash, c.hash);
  EXPECT_EQ(c.seed, 5u);
}

TEST(Config, ReferencedFilesEnterTheHash) {
  const fs::path dir = fs::temp_directory_path() / ("ltcar_config_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string doc = R"({"explore": {"scenario": "track", "track": "t.json",
                                          "speed": {"constant": 20}}})";
  std::ofstream(dir / "run.json") << doc;
  std::ofstream(dir / "t.json") << R"({"segments": [{"type": "straight", "length": 100}]})";
  const RunConfig a = load_config((dir / "run.json").string());
  EXPECT_DOUBLE_EQ(a.explore.track.length(), 100.0);
  std::ofstream(dir / "t.json") << R"({"segments": [{"type": "straight", "length": 120}]})";
  const RunConfig b = load_config((dir / "run.json").string());
  EXPECT_DOUBLE_EQ(b.explore.track.length(), 120.0);
  EXPECT_NE(a.hash, b.hash);
  fs::remove_all(dir);
  EXPECT_THROW(load_config((dir / "run.json").string()), IoError);
}

TEST(Track, SegmentsParse) {
  const explore::PathSpec p = parse_track(R"({
    "start": {"x": 1, "y": 2, "heading": 0},
    "segments": [
      {"type": "straight", "length": 10},
      {"type": "ramp", "length": 5, "curvature_start": 0, "curvature_end": 0.02},
      {"type": "arc", "length": 20, "curvature": 0.02}
    ]})",
                                          "t.json");
  ASSERT_EQ(p.segments().size(), 3u);
  EXPECT_DOUBLE_EQ(p.length(), 35.0);
  EXPECT_DOUBLE_EQ(p.curvature(30.0), 0.02);
  EXPECT_DOUBLE_EQ(p.pose(0.0).x, 1.0);
}

TEST(Track, ErrorsNameTheSegment) {
  auto msg = [](const std::string& text) {
    try {
      parse_track(text, "t.json");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(msg(R"({"segments": [{"type": "arc", "length": 5}]})")
                .find("t.json.segments[0].curvature: is required"),
            std::string::npos);
  EXPECT_NE(msg(R"({"segments": [{"type": "spiral", "length": 5}]})").find("segments[0].type"),
            std::string::npos);
  EXPECT_NE(msg(R"({"segments": []})").find("segments"), std::string::npos);
  // A curvature jump between segments is rejected by the path itself.
  EXPECT_NE(msg(R"({"segments": [{"type": "straight", "length": 5},
                                  {"type": "arc", "length": 5, "curvature": 0.1}]})"),
            "");
}

TEST(Track, WaypointsFit) {
  std::string pts;
  for (int i = 0; i <= 8; ++i) {
    const double th = i * std::numbers::pi / 16.0;
    pts += (i ? "," : "") + std::string("[") + std::to_string(50 * std::sin(th)) + "," +
           std::to_string(50 * (1 - std::cos(th))) + "]";
  }
  const explore::PathSpec p = parse_track(R"({"waypoints": [)" + pts + "]}", "w.json");
  EXPECT_NEAR(p.length(), 50.0 * std::numbers::pi / 2.0, 0.05);
}

}  // namespace
}  // namespace ltcar::app
