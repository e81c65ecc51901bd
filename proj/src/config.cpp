#include "ltcar/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ltcar/errors.hpp"
#include "ltcar/io.hpp"
#include "ltcar/params.hpp"

namespace ltcar::app {

namespace {

using json = nlohmann::json;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// One JSON object being read; every key must be consumed before finish().
class Fields {
 public:
  Fields(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) fail(path_.empty() ? "document" : path_, "must be an object");
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& msg) {
    throw ConfigError(where + ": " + msg);
  }

  const json* raw(const std::string& key) {
    if (!j_) return nullptr;
    const auto it = j_->find(key);
    if (it == j_->end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  bool has(const std::string& key) const { return j_ && j_->contains(key); }

  double number(const std::string& key, double def, double lo = -kInf,
                double hi = kInf, bool open_low = false) {
    const json* v = raw(key);
    if (!v) return def;
    return check_number(*v, at(key), lo, hi, open_low);
  }

  int integer(const std::string& key, int def, int lo, int hi) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number_integer()) fail(at(key), "must be an integer");
    const auto n = v->get<long long>();
    if (n < lo || n > hi) {
      fail(at(key), "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<int>(n);
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_boolean()) fail(at(key), "must be true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_string()) fail(at(key), "must be a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def,
                              std::size_t exact_size = 0, double lo = -kInf,
                              double hi = kInf, bool open_low = false) {
    const json* v = raw(key);
    if (!v) return def;
    return check_numbers(*v, at(key), exact_size, lo, hi, open_low);
  }

  Fields child(const std::string& key) { return Fields(raw(key), at(key)); }
  bool present() const { return j_ != nullptr; }

  void finish() const {
    if (!j_) return;
    for (const auto& [key, value] : j_->items()) {
      if (!used_.count(key)) fail(at(key), "unknown setting");
    }
  }

  static double check_number(const json& v, const std::string& where, double lo,
                             double hi, bool open_low) {
    if (!v.is_number()) fail(where, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(where, "must be finite");
    if ((open_low ? !(x > lo) : !(x >= lo)) || !(x <= hi)) {
      fail(where, "must be in " + std::string(open_low ? "(" : "[") + fmt(lo) +
                      ", " + fmt(hi) + "], got " + fmt(x));
    }
    return x;
  }

  static std::vector<double> check_numbers(const json& v, const std::string& where,
                                           std::size_t exact_size, double lo,
                                           double hi, bool open_low) {
    if (!v.is_array()) fail(where, "must be a list of numbers");
    if (exact_size && v.size() != exact_size) {
      fail(where, "must have " + std::to_string(exact_size) + " entries");
    }
    if (v.empty()) fail(where, "must not be empty");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(check_number(v[i], where + "[" + std::to_string(i) + "]", lo,
                                 hi, open_low));
    }
    return out;
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

// A grid given as a list or as {"from", "to", "count"}.
std::vector<double> read_grid(Fields& f, const std::string& key,
                              std::vector<double> def, double lo, double hi,
                              bool open_low) {
  const json* v = f.raw(key);
  if (!v) return def;
  if (v->is_array()) {
    return Fields::check_numbers(*v, f.at(key), 0, lo, hi, open_low);
  }
  Fields g(v, f.at(key));
  const double from = g.number("from", lo, lo, hi, open_low);
  const double to = g.number("to", hi, lo, hi, open_low);
  const int count = g.integer("count", 101, 1, 1000000);
  if (!g.has("from") || !g.has("to")) Fields::fail(f.at(key), "needs from and to");
  g.finish();
  if (count == 1) return {from};
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = from + (to - from) * i / (count - 1);
  return out;
}

Vec3 vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    const auto cut = msg.find("; ");
    if (cut != std::string::npos) msg = msg.substr(cut + 2);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" +
                      std::to_string(col) + ": " + msg);
  }
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set " + assignment + ": expected key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("--set " + assignment + ": empty key segment");
    if (!node->is_object()) {
      throw ConfigError("--set " + assignment + ": '" + key.substr(0, start - 1) +
                        "' is not an object");
    }
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

tire::TireParams read_tire(Fields f, tire::TireParams p) {
  struct Field {
    const char* name;
    double tire::TireParams::*member;
  };
  static const Field kFields[] = {
      {"d_x", &tire::TireParams::d_x},     {"c_x", &tire::TireParams::c_x},
      {"b_x", &tire::TireParams::b_x},     {"e_x", &tire::TireParams::e_x},
      {"d_y", &tire::TireParams::d_y},     {"c_y", &tire::TireParams::c_y},
      {"b_y", &tire::TireParams::b_y},     {"e_y", &tire::TireParams::e_y},
      {"c_xb", &tire::TireParams::c_xb},   {"r_bx1", &tire::TireParams::r_bx1},
      {"r_bx2", &tire::TireParams::r_bx2}, {"c_yk", &tire::TireParams::c_yk},
      {"r_by1", &tire::TireParams::r_by1}, {"r_by2", &tire::TireParams::r_by2}};
  for (const Field& fl : kFields) p.*fl.member = f.number(fl.name, p.*fl.member);
  f.finish();
  return p;
}

void read_vehicle(Fields& root, RunConfig& c) {
  const json* v = root.raw("vehicle");
  tire::TireModel model = tire::TireModel::kPacejka;
  if (v && v->is_string()) {
    c.preset = v->get<std::string>();
  } else {
    Fields f(v, "vehicle");
    c.preset = f.text("preset", "sports");
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), c.preset) == names.end()) {
      Fields::fail("vehicle.preset", "unknown parameter set '" + c.preset + "'");
    }
    try {
      model = tire::tire_model_from_string(f.text("tire_model", "pacejka"));
    } catch (const std::invalid_argument& e) {
      Fields::fail("vehicle.tire_model", e.what());
    }
    c.car = car_preset(c.preset, model);
    Fields p = f.child("params");
    VehicleParams& q = c.car.vehicle;
    q.m = p.number("m", q.m, 0.0, kInf, true);
    q.a = p.number("a", q.a, 0.0, kInf, true);
    q.b = p.number("b", q.b, 0.0, kInf, true);
    q.h = p.number("h", q.h, 0.0);
    q.I_zz = p.number("I_zz", q.I_zz, 0.0, kInf, true);
    q.I_xz = p.number("I_xz", q.I_xz);
    q.I_yy = p.number("I_yy", q.I_yy, 0.0);
    q.g = p.number("g", q.g, 0.0, kInf, true);
    p.finish();
    if (f.has("rear_tire")) {
      c.car.tires.rear = tire::AxleTire::from_params(
          read_tire(f.child("rear_tire"), c.car.tires.rear.params));
    }
    if (f.has("front_tire")) {
      c.car.tires.front = tire::AxleTire::from_params(
          read_tire(f.child("front_tire"), c.car.tires.front.params));
    }
    c.car.vx_min = f.number("vx_min", c.car.vx_min, 0.0, kInf, true);
    f.finish();
    try {
      c.car.vehicle.validate();
      c.car.tires.rear.params.validate();
      c.car.tires.front.params.validate();
    } catch (const std::invalid_argument& e) {
      Fields::fail("vehicle", e.what());
    }
    return;
  }
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), c.preset) == names.end()) {
    Fields::fail("vehicle", "unknown parameter set '" + c.preset + "'");
  }
  c.car = car_preset(c.preset, model);
}

explore::PathSpec track_from_json(const json& j, const std::string& where) {
  Fields f(&j, where);
  try {
    if (f.has("waypoints")) {
      const json* w = f.raw("waypoints");
      if (!w->is_array()) Fields::fail(f.at("waypoints"), "must be a list of [x, y] pairs");
      std::vector<Eigen::Vector2d> pts;
      for (std::size_t i = 0; i < w->size(); ++i) {
        const auto xy = Fields::check_numbers((*w)[i], f.at("waypoints") + "[" +
                                                           std::to_string(i) + "]",
                                              2, -kInf, kInf, false);
        pts.emplace_back(xy[0], xy[1]);
      }
      const double piece = f.number("max_piece", 2.0, 0.0, kInf, true);
      f.finish();
      return explore::fit_waypoints(pts, piece);
    }
    Fields s = f.child("start");
    explore::Pose2 start{s.number("x", 0.0), s.number("y", 0.0),
                         s.number("heading", 0.0)};
    s.finish();
    const json* segs = f.raw("segments");
    if (!segs || !segs->is_array() || segs->empty()) {
      Fields::fail(f.at("segments"), "must be a non-empty list");
    }
    std::vector<explore::Segment> out;
    for (std::size_t i = 0; i < segs->size(); ++i) {
      Fields g(&(*segs)[i], f.at("segments") + "[" + std::to_string(i) + "]");
      const std::string type = g.text("type", "");
      const double len = g.number("length", 0.0, 0.0, kInf, true);
      if (!g.has("length")) Fields::fail(g.at("length"), "is required");
      explore::SegmentKind kind;
      try {
        kind = explore::segment_kind_from_string(type);
      } catch (const std::invalid_argument& e) {
        Fields::fail(g.at("type"), e.what());
      }
      switch (kind) {
        case explore::SegmentKind::kStraight:
          out.push_back(explore::Segment::straight(len));
          break;
        case explore::SegmentKind::kArc:
          if (!g.has("curvature")) Fields::fail(g.at("curvature"), "is required");
          out.push_back(explore::Segment::arc(len, g.number("curvature", 0.0)));
          break;
        case explore::SegmentKind::kRamp:
          if (!g.has("curvature_start") || !g.has("curvature_end")) {
            Fields::fail(g.at("curvature_start"),
                         "ramps need curvature_start and curvature_end");
          }
          out.push_back(explore::Segment::ramp(len, g.number("curvature_start", 0.0),
                                               g.number("curvature_end", 0.0)));
          break;
      }
      g.finish();
    }
    f.finish();
    return explore::PathSpec(start, std::move(out));
  } catch (const std::invalid_argument& e) {
    Fields::fail(where, e.what());
  }
}

explore::SpeedProfile read_speed(Fields f) {
  try {
    if (f.has("constant")) {
      const double v = f.number("constant", 0.0, 1.0, kInf);
      f.finish();
      return explore::SpeedProfile::constant(v);
    }
    auto s = f.numbers("s", {}, 0, 0.0);
    auto v = f.numbers("v", {}, 0, 1.0);
    if (s.empty() || v.empty()) {
      Fields::fail(f.at("s"), "speed needs either constant or both s and v lists");
    }
    f.finish();
    return explore::SpeedProfile(std::move(s), std::move(v));
  } catch (const std::invalid_argument& e) {
    Fields::fail(f.at("v"), e.what());
  }
}

std::filesystem::path resolve(const std::string& base, const std::string& name) {
  const std::filesystem::path p(name);
  return p.is_absolute() ? p : std::filesystem::path(base) / p;
}

void read_explore(Fields f, RunConfig& c, const std::string& base_dir,
                  std::string& referenced) {
  ExploreConfig& e = c.explore;
  const std::string sc = f.text("scenario", "chicane");
  if (sc == "chicane") e.scenario = Scenario::kChicane;
  else if (sc == "loop") e.scenario = Scenario::kLoop;
  else if (sc == "track") e.scenario = Scenario::kTrack;
  else if (sc == "external") e.scenario = Scenario::kExternal;
  else Fields::fail(f.at("scenario"), "unknown scenario '" + sc +
                                          "' (expected chicane, loop, track or external)");

  if (const json* t = f.raw("track")) {
    if (e.scenario != Scenario::kTrack) Fields::fail(f.at("track"), "only used by the track scenario");
    if (t->is_string()) {
      const auto p = resolve(base_dir, t->get<std::string>());
      const std::string text = read_text(p);
      referenced += p.string() + ":" + io::hash_hex(io::fnv1a64(text)) + "\n";
      e.track = parse_track(text, p.string());
    } else {
      e.track = track_from_json(*t, f.at("track"));
    }
  } else if (e.scenario == Scenario::kTrack) {
    Fields::fail(f.at("track"), "is required for the track scenario");
  }
  if (f.has("speed")) {
    if (e.scenario != Scenario::kTrack) Fields::fail(f.at("speed"), "only used by the track scenario");
    e.speed = read_speed(f.child("speed"));
  } else if (e.scenario == Scenario::kTrack) {
    Fields::fail(f.at("speed"), "is required for the track scenario");
  }

  switch (e.scenario) {
    case Scenario::kChicane:
      e.schedule_kind = ScheduleKind::kAggressiveness;
      e.schedule = explore::aggressiveness_schedule();
      break;
    case Scenario::kLoop:
      e.schedule_kind = ScheduleKind::kSpeed;
      e.schedule = explore::speed_schedule();
      break;
    case Scenario::kTrack:
      e.schedule_kind = ScheduleKind::kScale;
      e.schedule = {1.0};
      break;
    case Scenario::kExternal:
      e.schedule = {0.0};
      break;
  }
  if (f.has("schedule")) {
    if (e.scenario == Scenario::kExternal) {
      Fields::fail(f.at("schedule"), "an external curve is a single leg");
    }
    Fields s = f.child("schedule");
    const std::string kind = s.text("kind", std::string(to_string(e.schedule_kind)));
    if (kind == "aggressiveness") e.schedule_kind = ScheduleKind::kAggressiveness;
    else if (kind == "speed") e.schedule_kind = ScheduleKind::kSpeed;
    else if (kind == "scale") e.schedule_kind = ScheduleKind::kScale;
    else Fields::fail(s.at("kind"), "unknown schedule '" + kind +
                                        "' (expected aggressiveness, speed or scale)");
    if (e.scenario == Scenario::kChicane && e.schedule_kind == ScheduleKind::kSpeed) {
      Fields::fail(s.at("kind"), "the chicane has its own speed profile");
    }
    if (e.scenario == Scenario::kLoop && e.schedule_kind != ScheduleKind::kSpeed) {
      Fields::fail(s.at("kind"), "the loop is driven at constant speed");
    }
    const double lo = e.schedule_kind == ScheduleKind::kSpeed ? 1.0 : 0.0;
    e.schedule = s.numbers("values", e.schedule, 0, lo, kInf,
                           e.schedule_kind == ScheduleKind::kScale);
    s.finish();
  }
  e.bicycle_comparison = f.boolean("bicycle_comparison", false);
  if (const json* file = f.raw("file")) {
    if (e.scenario != Scenario::kExternal) Fields::fail(f.at("file"), "only used by the external scenario");
    if (!file->is_string()) Fields::fail(f.at("file"), "must be a string");
    const auto p = resolve(base_dir, file->get<std::string>());
    e.external_file = p.string();
    referenced += p.string() + ":" + io::hash_hex(io::fnv1a64(read_text(p))) + "\n";
  } else if (e.scenario == Scenario::kExternal) {
    Fields::fail(f.at("file"), "is required for the external scenario");
  }
  e.perturb_position = f.number("perturb_position", 0.0, 0.0);
  if (e.perturb_position > 0.0 && e.scenario != Scenario::kExternal) {
    Fields::fail(f.at("perturb_position"), "only used by the external scenario");
  }
  f.finish();
}

void read_weights(Fields f, trajopt::Weights& w) {
  auto diag6 = [&](const char* key, trajopt::Mat6& m) {
    if (!f.has(key)) return;
    const auto d = f.numbers(key, {}, 6, 0.0);
    m = Vec6(d.data()).asDiagonal();
  };
  auto diag3 = [&](const char* key, trajopt::Mat3& m) {
    if (!f.has(key)) return;
    const auto d = f.numbers(key, {}, 3, 0.0, kInf, true);
    m = Vec3(d.data()).asDiagonal();
  };
  diag6("Q", w.Q);
  diag6("P1", w.P1);
  diag6("Q_K", w.Q_K);
  diag3("R", w.R);
  diag3("R_K", w.R_K);
  if (const json* a = f.raw("active")) {
    if (!a->is_array() || a->size() != 3) {
      Fields::fail(f.at("active"), "must be three booleans (delta, kappa_r, kappa_f)");
    }
    for (int i = 0; i < 3; ++i) {
      if (!(*a)[i].is_boolean()) Fields::fail(f.at("active"), "must be three booleans");
      w.active[i] = (*a)[i].get<bool>();
    }
  }
  f.finish();
}

void read_solver(Fields f, RunConfig& c) {
  c.dt = f.number("dt", 0.01, 0.0, 1.0, true);
  const double nu = f.number("nu", 1e-8, 0.0, 1.0, true);
  c.continuation.nu = nu;
  c.point.nu = nu;
  c.newton.grad_tol = f.number("grad_tol", c.newton.grad_tol, 0.0, 1.0, true);
  c.newton.max_iter = f.integer("max_iter", c.newton.max_iter, 0, 100000);
  const std::string h = f.text("hessian", "gauss-newton");
  if (h == "gauss-newton") c.newton.mode = trajopt::HessianMode::kGaussNewton;
  else if (h == "newton") c.newton.mode = trajopt::HessianMode::kNewton;
  else Fields::fail(f.at("hessian"), "expected gauss-newton or newton");
  try {
    c.newton.gain = trajopt::gain_design_from_string(
        f.text("gain_design", std::string(trajopt::to_string(c.newton.gain))));
  } catch (const std::invalid_argument& e) {
    Fields::fail(f.at("gain_design"), e.what());
  }
  Fields ls = f.child("line_search");
  c.newton.line_search.sigma = ls.number("sigma", c.newton.line_search.sigma, 0.0, 1.0, true);
  c.newton.line_search.max_halvings =
      ls.integer("max_halvings", c.newton.line_search.max_halvings, 0, 60);
  ls.finish();
  Fields ct = f.child("continuation");
  manifold::ContinuationOptions& co = c.continuation;
  co.step = ct.number("step", co.step, 0.0, kInf, true);
  co.min_step = ct.number("min_step", co.min_step, 0.0, kInf, true);
  co.max_points = ct.integer("max_points", co.max_points, 1, 10000000);
  co.max_corrector_iterations =
      ct.integer("max_corrector_iterations", co.max_corrector_iterations, 1, 1000);
  co.max_abs_delta = ct.number("max_abs_delta", co.max_abs_delta, 0.0, kInf, true);
  co.max_abs_kappa = ct.number("max_abs_kappa", co.max_abs_kappa, 0.0, kInf, true);
  ct.finish();
  c.point.max_abs_delta = co.max_abs_delta;
  c.point.max_abs_kappa = co.max_abs_kappa;

  switch (c.explore.scenario) {
    case Scenario::kExternal:
      c.weights = explore::external_curve_weights();
      break;
    default:
      c.weights = explore::synthetic_scenario_weights();
  }
  read_weights(f.child("weights"), c.weights);
  try {
    c.weights.validate();
  } catch (const std::invalid_argument& e) {
    Fields::fail(f.at("weights"), e.what());
  }
  f.finish();
}

void read_tire_sweep(Fields f, TireSweepConfig& t) {
  std::vector<double> kappa, beta;
  for (int i = 0; i <= 200; ++i) kappa.push_back(-0.5 + i * 0.005);
  for (int i = 0; i <= 120; ++i) beta.push_back(-0.3 + i * 0.005);
  t.kappa = read_grid(f, "kappa", kappa, -1.0, kInf, true);
  t.beta = read_grid(f, "beta", beta, -1.5, 1.5, false);
  t.loads = f.numbers("loads", {2000.0, 4000.0, 6000.0}, 0, 0.0, kInf, true);
  t.ellipse_beta = f.numbers("ellipse_beta", {0.0, 0.05, 0.1, 0.2}, 0, -1.5, 1.5);
  t.axle = f.text("axle", "rear");
  if (t.axle != "rear" && t.axle != "front") Fields::fail(f.at("axle"), "expected rear or front");
  t.linear_overlay = f.boolean("linear_overlay", false);
  f.finish();
}

void read_equilibria(Fields f, EquilibriaConfig& e) {
  e.speeds = f.numbers("speeds", {20.0, 30.0, 40.0}, 0, 0.0, kInf, true);
  e.a_lat_understeer = f.number("a_lat_understeer", 3.0, 0.0, kInf, true);
  if (f.has("sweep")) {
    Fields s = f.child("sweep");
    ParameterSweepConfig p;
    p.parameter = s.text("parameter", "");
    static const std::set<std::string> kNames = {"b", "h", "m", "I_zz", "I_xz"};
    if (!kNames.count(p.parameter)) {
      Fields::fail(s.at("parameter"), "expected one of b, h, m, I_zz, I_xz");
    }
    p.values = s.numbers("values", {});
    if (p.values.empty()) Fields::fail(s.at("values"), "is required");
    p.v = s.number("v", 30.0, 0.0, kInf, true);
    s.finish();
    e.sweep = p;
  }
  f.finish();
}

void read_simulate(Fields f, SimulateConfig& s, const std::string& base_dir,
                   std::string& referenced) {
  s.initial_state = Vec6(f.numbers("initial_state", {0, 0, 0, 20, 0, 0}, 6).data());
  s.duration = f.number("duration", 5.0, 0.0, kInf, true);
  if (f.has("inputs")) {
    Fields in = f.child("inputs");
    int given = 0;
    if (in.has("constant")) {
      ++given;
      s.source = InputSource::kConstant;
      s.start = vec3(in.numbers("constant", {}, 3));
    }
    if (in.has("ramp")) {
      ++given;
      s.source = InputSource::kRamp;
      Fields r = in.child("ramp");
      s.start = vec3(r.numbers("start", {0, 0, 0}, 3));
      s.rate = vec3(r.numbers("rate", {0, 0, 0}, 3));
      r.finish();
    }
    if (in.has("file")) {
      ++given;
      s.source = InputSource::kFile;
      const auto p = resolve(base_dir, in.text("file", ""));
      s.input_file = p.string();
      referenced += p.string() + ":" + io::hash_hex(io::fnv1a64(read_text(p))) + "\n";
    }
    if (given != 1) Fields::fail(f.at("inputs"), "give exactly one of constant, ramp or file");
    in.finish();
  }
  f.finish();
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::kChicane: return "chicane";
    case Scenario::kLoop: return "loop";
    case Scenario::kTrack: return "track";
    case Scenario::kExternal: return "external";
  }
  return "?";
}

std::string_view to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kAggressiveness: return "aggressiveness";
    case ScheduleKind::kSpeed: return "speed";
    case ScheduleKind::kScale: return "scale";
  }
  return "?";
}

explore::PathSpec parse_track(const std::string& text, const std::string& origin) {
  return track_from_json(parse_json(text, origin), origin);
}

RunConfig parse_config(const std::string& text, const std::string& origin,
                       const std::vector<std::string>& overrides,
                       const std::string& base_dir) {
  json doc = text.find_first_not_of(" \t\r\n") == std::string::npos
                 ? json::object()
                 : parse_json(text, origin);
  if (!doc.is_object()) throw ConfigError(origin + ": the document must be an object");
  for (const std::string& o : overrides) apply_override(doc, o);

  RunConfig c;
  std::string referenced;
  Fields root(&doc, "");
  read_vehicle(root, c);
  const std::string model = root.text("model", "ltcar");
  try {
    c.model = trajopt::dynamics_model_from_string(model);
  } catch (const std::invalid_argument& e) {
    Fields::fail("model", e.what());
  }
  read_explore(root.child("explore"), c, base_dir, referenced);
  read_solver(root.child("solver"), c);
  read_tire_sweep(root.child("tire"), c.tire);
  read_equilibria(root.child("equilibria"), c.equilibria);
  read_simulate(root.child("simulate"), c.simulate, base_dir, referenced);
  Fields out = root.child("output");
  c.output_dir = out.text("dir", c.output_dir);
  out.finish();
  c.threads = root.integer("threads", 1, 1, 1024);
  if (const json* s = root.raw("seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0)) {
      Fields::fail("seed", "must be a non-negative integer");
    }
    c.seed = s->get<std::uint64_t>();
  }
  root.finish();

  json canon = doc;
  canon.erase("output");
  canon.erase("threads");
  c.canonical = canon.dump() + "\n" + referenced;
  c.hash = io::hash_hex(io::fnv1a64(c.canonical));
  return c;
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  const std::filesystem::path p(path);
  const std::string base = p.has_parent_path() ? p.parent_path().string() : ".";
  return parse_config(read_text(p), path, overrides, base);
}

}  // namespace ltcar::app
