#include "ltcar/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ltcar/config.hpp"
#include "ltcar/errors.hpp"
#include "ltcar/io.hpp"

namespace ltcar::app {

namespace {

using json = nlohmann::json;
using io::format_double;

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

json meta(const std::string& command, json extra = json::object()) {
  extra["command"] = command;
  return extra;
}

std::string table(const std::vector<std::string>& header,
                  const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    out += (i ? "," : "") + header[i];
  }
  out += "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += (i ? "," : "") + format_double(r[i]);
    }
    out += "\n";
  }
  return out;
}

// ---- tire ----

int cmd_tire(const RunConfig& c, io::OutputWriter& w, std::ostream& out) {
  const TireSweepConfig& t = c.tire;
  const tire::AxleTire& axle = t.axle == "rear" ? c.car.tires.rear : c.car.tires.front;
  auto force = [&](const tire::SlipState& s, tire::TireModel m, double load) {
    const tire::FrictionPair mu = tire::evaluate(s, axle, m);
    return std::pair{mu.mu_x * load, mu.mu_y * load};
  };

  std::vector<std::string> hx{"kappa"}, hy{"beta"};
  for (double l : t.loads) {
    hx.push_back("fx_" + label(l));
    hy.push_back("fy_" + label(l));
  }
  if (t.linear_overlay) {
    for (double l : t.loads) {
      hx.push_back("fx_linear_" + label(l));
      hy.push_back("fy_linear_" + label(l));
    }
  }
  std::vector<std::vector<double>> rx, ry, rc;
  for (double k : t.kappa) {
    std::vector<double> r{k};
    for (double l : t.loads) r.push_back(force({k, 0.0, 0.0}, tire::TireModel::kPacejka, l).first);
    if (t.linear_overlay) {
      for (double l : t.loads) r.push_back(force({k, 0.0, 0.0}, tire::TireModel::kLinear, l).first);
    }
    rx.push_back(std::move(r));
  }
  for (double b : t.beta) {
    std::vector<double> r{b};
    for (double l : t.loads) r.push_back(force({0.0, b, 0.0}, tire::TireModel::kPacejka, l).second);
    if (t.linear_overlay) {
      for (double l : t.loads) r.push_back(force({0.0, b, 0.0}, tire::TireModel::kLinear, l).second);
    }
    ry.push_back(std::move(r));
  }
  for (double l : t.loads) {
    for (double b : t.ellipse_beta) {
      for (double k : t.kappa) {
        const auto [fx, fy] = force({k, b, 0.0}, tire::TireModel::kPacejka, l);
        rc.push_back({l, b, k, fx, fy});
      }
    }
  }
  const json m = meta("tire", {{"axle", t.axle}, {"units", "N, rad"}});
  w.write("tire_longitudinal.csv", table(hx, rx), m.dump());
  w.write("tire_lateral.csv", table(hy, ry), m.dump());
  w.write("tire_combined.csv", table({"load", "beta", "kappa", "fx", "fy"}, rc), m.dump());
  out << "tire: " << t.loads.size() << " loads, " << t.kappa.size() << " slips, "
      << t.beta.size() << " sideslips\n";
  return kExitOk;
}

// ---- equilibria ----

json branch_summary(const manifold::ManifoldBranch& b, double wheelbase,
                    double a_lat_understeer) {
  json j;
  j["v"] = b.v;
  j["points"] = b.points.size();
  j["termination"] = std::string(manifold::to_string(b.termination));
  if (!b.points.empty()) {
    const std::size_t i = b.max_lateral_index();
    j["max_a_lat"] = b.points[i].x.a_lat;
    j["max_a_lat_index"] = i;
  }
  if (b.fold_index) {
    j["fold_index"] = *b.fold_index;
    j["fold_a_lat"] = b.points[*b.fold_index].x.a_lat;
  } else {
    j["fold_index"] = nullptr;
  }
  json kus = json::array();
  try {
    for (const auto& s : manifold::understeer_gradient(b, wheelbase, a_lat_understeer)) {
      kus.push_back({{"a_lat", s.a_lat}, {"k_us", s.k_us}});
    }
  } catch (const std::invalid_argument& e) {
    j["understeer_error"] = e.what();
  }
  j["understeer"] = kus;
  bool counter = false;
  for (const auto& p : b.points) counter = counter || p.x.delta * p.x.a_lat < 0.0;
  j["counter_steering"] = counter;
  return j;
}

int cmd_equilibria(const RunConfig& c, io::OutputWriter& w, std::ostream& out) {
  const manifold::EquilibriumSystem sys{c.car, c.load_model()};
  const auto& speeds = c.equilibria.speeds;
  std::vector<std::optional<manifold::ManifoldBranch>> branches(speeds.size());
  std::vector<std::string> errors(speeds.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < speeds.size(); i = next++) {
      try {
        branches[i] = manifold::trace_branch({}, speeds[i], sys, c.continuation);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int nt = std::max(1, std::min<int>(c.threads, static_cast<int>(speeds.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < nt; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  json summary;
  summary["load_model"] = c.load_model() == manifold::LoadModel::kStatic ? "static" : "load-transfer";
  summary["branches"] = json::array();
  const double wb = c.car.vehicle.wheelbase();
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    if (!branches[i]) {
      throw NumericError(NumericFailure::kNoConvergence,
                         "branch at v = " + label(speeds[i]) + ": " + errors[i]);
    }
    const std::string name = "branch_v" + label(speeds[i]) + ".csv";
    w.write(name, io::branch_csv(*branches[i]), meta("equilibria", {{"v", speeds[i]}}).dump());
    json s = branch_summary(*branches[i], wb, c.equilibria.a_lat_understeer);
    s["file"] = name;
    summary["branches"].push_back(s);
  }
  if (c.equilibria.sweep) {
    const ParameterSweepConfig& sw = *c.equilibria.sweep;
    const auto entries = manifold::sweep_parameter(sw.parameter, sw.values, sw.v, sys,
                                                   c.continuation, c.threads);
    json js = json::array();
    for (const auto& e : entries) {
      json s;
      s["parameter"] = sw.parameter;
      s["value"] = e.value;
      if (e.branch) {
        const std::string name = "sweep_" + sw.parameter + "_" + label(e.value) + ".csv";
        w.write(name, io::branch_csv(*e.branch),
                meta("equilibria", {{"parameter", sw.parameter}, {"value", e.value}, {"v", sw.v}})
                    .dump());
        const VehicleParams q = manifold::with_parameter(c.car.vehicle, sw.parameter, e.value);
        s.update(branch_summary(*e.branch, q.wheelbase(), c.equilibria.a_lat_understeer));
        s["file"] = name;
      } else {
        s["error"] = e.error;
      }
      js.push_back(s);
    }
    summary["sweep"] = js;
  }
  w.write("equilibria_summary.json", summary.dump(2) + "\n", meta("equilibria").dump());
  out << "equilibria: " << speeds.size() << " branches";
  if (c.equilibria.sweep) out << ", sweep of " << c.equilibria.sweep->values.size();
  out << "\n";
  return kExitOk;
}

// ---- simulate ----

std::vector<Vec3> input_samples(const SimulateConfig& s, double dt, std::size_t n) {
  std::vector<Vec3> u(n);
  if (s.source == InputSource::kFile) {
    const io::InputTable tab = io::read_input_csv(s.input_file);
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) * dt;
      while (j + 1 < tab.t.size() && tab.t[j + 1] <= t) ++j;
      if (j + 1 == tab.t.size() || t <= tab.t[j]) {
        u[k] = tab.u[j];
      } else {
        const double f = (t - tab.t[j]) / (tab.t[j + 1] - tab.t[j]);
        u[k] = (1 - f) * tab.u[j] + f * tab.u[j + 1];
      }
    }
    return u;
  }
  for (std::size_t k = 0; k < n; ++k) {
    u[k] = s.start + static_cast<double>(k) * dt * s.rate;
  }
  return u;
}

int cmd_simulate(const RunConfig& c, io::OutputWriter& w, std::ostream& out) {
  const SimulateConfig& s = c.simulate;
  const auto n = static_cast<std::size_t>(std::floor(s.duration / c.dt + 1e-9)) + 1;
  const std::vector<Vec3> u = input_samples(s, c.dt, n);
  const trajopt::Plant plant{c.car, c.model};
  const trajopt::Trajectory traj = trajopt::integrate(s.initial_state, u, c.dt, plant);

  io::Columns extra{{"ffz", {}}, {"frz", {}}, {"beta_r", {}}, {"beta_f", {}},
                    {"a_lat", {}}, {"wellposed_margin", {}}};
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const CarState st{traj.x(k)[0], traj.x(k)[1], traj.x(k)[2],
                      traj.x(k)[3], traj.x(k)[4], traj.x(k)[5]};
    const CarInput in = CarInput::from_vector(traj.u(k));
    const ContactSlips sl = contact_slips(st, in, c.car.vehicle, c.car.vx_min);
    const AxleCoefficients mu = axle_coefficients(sl, c.car.tires);
    const NormalLoads loads = c.model == trajopt::DynamicsModel::kBicycle
                                  ? static_loads(c.car.vehicle)
                                  : dynamics_vxvy(st, in, c.car).loads;
    extra[0].second.push_back(loads.ffz);
    extra[1].second.push_back(loads.frz);
    extra[2].second.push_back(sl.rear.beta);
    extra[3].second.push_back(sl.front.beta);
    extra[4].second.push_back(explore::lateral_acceleration(plant, traj.x(k), traj.u(k)));
    extra[5].second.push_back(well_posed(mu.mu_fx, mu.mu_rx, st.psidot, c.car.vehicle).margin);
  }
  w.write("simulate.csv", io::curve_csv(traj.curve(), extra),
          meta("simulate", {{"model", std::string(trajopt::to_string(c.model))}}).dump());
  out << "simulate: " << traj.size() << " samples over " << traj.curve().horizon() << " s\n";
  return kExitOk;
}

// ---- explore ----

explore::CurveBuilder builder_for(const RunConfig& c, manifold::LoadModel loads) {
  explore::QuasiStaticOptions qo;
  qo.loads = loads;
  qo.solve = c.point;
  const ExploreConfig& e = c.explore;
  switch (e.scenario) {
    case Scenario::kChicane:
      return explore::chicane_builder(c.car, c.dt, qo);
    case Scenario::kLoop:
      return explore::loop_builder(c.car, c.dt, qo);
    case Scenario::kTrack:
      return [c, qo](double p) {
        const ExploreConfig& e = c.explore;
        explore::SpeedProfile prof;
        switch (e.schedule_kind) {
          case ScheduleKind::kAggressiveness:
            prof = e.speed.scaled_deviation(p, e.track.length());
            break;
          case ScheduleKind::kSpeed:
            prof = explore::SpeedProfile::constant(p);
            break;
          case ScheduleKind::kScale:
            prof = e.speed.scaled(p);
            break;
        }
        explore::DesiredCurve d =
            explore::quasi_static_with_fallback(e.track, prof, c.car, c.dt, qo);
        d.parameter = p;
        return d;
      };
    case Scenario::kExternal:
      return [c](double p) {
        explore::DesiredCurve d = explore::load_external_curve(c.explore.external_file, c.dt);
        d.parameter = p;
        if (c.explore.perturb_position > 0.0) {
          std::mt19937_64 rng(c.seed);
          std::normal_distribution<double> noise(0.0, c.explore.perturb_position);
          for (Vec6& x : d.curve.x) {
            x[0] += noise(rng);
            x[1] += noise(rng);
          }
        }
        return d;
      };
  }
  throw std::logic_error("unhandled scenario");
}

struct Run {
  std::vector<explore::DesiredCurve> family;
  explore::ExploreResult result;
};

Run run_family(const RunConfig& c, trajopt::DynamicsModel model, manifold::LoadModel loads) {
  Run r;
  r.family = explore::morph_family(builder_for(c, loads), c.explore.schedule, c.threads);
  const trajopt::Plant plant{c.car, model};
  r.result = explore::explore(r.family, c.weights, plant, c.newton);
  return r;
}

json leg_summary(const explore::Leg& leg, const explore::DesiredCurve& d) {
  const auto& log = leg.result.log;
  return {{"parameter", leg.parameter},
          {"tire_model", std::string(tire::to_string(d.tire_model))},
          {"projection_cost", leg.projection_cost},
          {"final_cost", log.back().cost},
          {"grad_zeta", log.back().grad_zeta},
          {"iterations", log.size() - 1},
          {"stop_reason", std::string(trajopt::to_string(leg.result.reason))},
          {"newton_fallback", leg.result.used_fallback}};
}

void write_legs(const RunConfig& c, const Run& r, const std::string& prefix,
                trajopt::DynamicsModel model, io::OutputWriter& w, json& summary) {
  const trajopt::Plant plant{c.car, model};
  json legs = json::array();
  for (std::size_t i = 0; i < r.result.legs.size(); ++i) {
    const explore::Leg& leg = r.result.legs[i];
    const explore::DesiredCurve& d = r.family[i];
    const trajopt::Curve& opt = leg.result.trajectory.curve();
    io::Columns extra{{"a_lat", {}}};
    for (std::size_t k = 0; k < opt.size(); ++k) {
      extra[0].second.push_back(explore::lateral_acceleration(plant, opt.x[k], opt.u[k]));
    }
    const std::string stem = prefix + "leg_" + std::to_string(i + 1);
    const json m = meta("explore", {{"model", std::string(trajopt::to_string(model))},
                                    {"leg", i + 1},
                                    {"parameter", leg.parameter}});
    w.write(stem + ".csv", io::curve_csv(opt, extra), m.dump());
    w.write(stem + ".desired.csv", io::curve_csv(d.curve), m.dump());
    w.write(stem + ".iterations.jsonl", io::iterate_log_jsonl(leg.result.log), m.dump());
    legs.push_back(leg_summary(leg, d));
  }
  json s;
  s["model"] = std::string(trajopt::to_string(model));
  s["legs"] = legs;
  s["complete"] = r.result.complete();
  if (r.result.failure) {
    s["failure"] = r.result.failure->what();
    s["failed_parameter"] = *r.result.failed_parameter;
  }
  summary[prefix.empty() ? "primary" : "bicycle"] = s;
}

std::string comparison_csv(const RunConfig& c, const Run& primary, const Run* bicycle) {
  const trajopt::Curve& d = primary.family.back().curve;
  const trajopt::Curve& o = primary.result.legs.back().result.trajectory.curve();
  const trajopt::Plant pp{c.car, c.model};
  const trajopt::Curve* b =
      bicycle ? &bicycle->result.legs.back().result.trajectory.curve() : nullptr;
  const trajopt::Plant pb{c.car, trajopt::DynamicsModel::kBicycle};
  std::vector<std::string> h{"t", "x_d", "y_d", "v_d", "x", "y", "v", "delta", "kappa_r", "a_lat"};
  if (b) {
    for (const char* n : {"x_bicycle", "y_bicycle", "v_bicycle", "delta_bicycle",
                          "kappa_r_bicycle", "a_lat_bicycle"}) {
      h.push_back(n);
    }
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < d.size(); ++k) {
    std::vector<double> r{d.time(k), d.x[k][0], d.x[k][1], std::hypot(d.x[k][3], d.x[k][4]),
                          o.x[k][0], o.x[k][1], std::hypot(o.x[k][3], o.x[k][4]),
                          o.u[k][0], o.u[k][1],
                          explore::lateral_acceleration(pp, o.x[k], o.u[k])};
    if (b) {
      r.insert(r.end(), {b->x[k][0], b->x[k][1], std::hypot(b->x[k][3], b->x[k][4]),
                         b->u[k][0], b->u[k][1],
                         explore::lateral_acceleration(pb, b->x[k], b->u[k])});
    }
    rows.push_back(std::move(r));
  }
  return table(h, rows);
}

int cmd_explore(const RunConfig& c, io::OutputWriter& w, std::ostream& out, std::ostream& err) {
  const Run primary = run_family(c, c.model, c.load_model());
  std::optional<Run> bicycle;
  if (c.explore.bicycle_comparison && c.model != trajopt::DynamicsModel::kBicycle) {
    bicycle = run_family(c, trajopt::DynamicsModel::kBicycle, manifold::LoadModel::kStatic);
  }
  json summary;
  summary["scenario"] = std::string(to_string(c.explore.scenario));
  summary["schedule"] = c.explore.schedule;
  write_legs(c, primary, "", c.model, w, summary);
  if (bicycle) write_legs(c, *bicycle, "bicycle_", trajopt::DynamicsModel::kBicycle, w, summary);

  const bool ok = primary.result.complete() && (!bicycle || bicycle->result.complete());
  if (ok) {
    w.write("comparison.csv", comparison_csv(c, primary, bicycle ? &*bicycle : nullptr),
            meta("explore").dump());
  }
  w.write("explore_summary.json", summary.dump(2) + "\n", meta("explore").dump());
  out << "explore: " << primary.result.legs.size() << "/" << primary.family.size()
      << " legs";
  if (bicycle) {
    out << ", bicycle " << bicycle->result.legs.size() << "/" << bicycle->family.size();
  }
  out << "\n";
  if (!ok) {
    const auto& f = !primary.result.complete() ? *primary.result.failure
                                               : *bicycle->result.failure;
    err << "ltcar: numeric failure: " << f.what() << " (completed legs written)\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int parse_threads(const std::string& text, const std::string& source) {
  try {
    std::size_t used = 0;
    const int n = std::stoi(text, &used);
    if (used == text.size() && n >= 1 && n <= 1024) return n;
  } catch (const std::exception&) {
  }
  throw ConfigError(source + ": thread count must be an integer in [1, 1024]");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-track car model with load transfer: tire curves, equilibrium "
               "manifolds, simulation and trajectory exploration",
               "ltcar"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir;
  bool force = false;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("-o,--out", out_dir, "output directory (overrides LTCAR_OUTPUT_DIR)");
  app.add_flag("-f,--force", force, "overwrite outputs from a different configuration");
  app.add_option("-j,--threads", threads, "worker threads (overrides LTCAR_THREADS)")
      ->check(CLI::Range(1, 1024));
  app.add_option("--seed", seed, "random seed for test perturbations");
  app.add_option("--set", sets, "override a setting: dotted.key=json-value");
  auto* tire_cmd = app.add_subcommand("tire", "pure and combined-slip tire force curves");
  auto* eq_cmd = app.add_subcommand("equilibria", "trace equilibrium manifold branches");
  auto* sim_cmd = app.add_subcommand("simulate", "integrate the model for given inputs");
  auto* exp_cmd = app.add_subcommand("explore", "quasi-static design and exploration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (seed) sets.push_back("seed=" + std::to_string(*seed));
    RunConfig c = config_path.empty() ? parse_config("", "<defaults>", sets)
                                      : load_config(config_path, sets);
    if (const char* env = std::getenv("LTCAR_OUTPUT_DIR"); env && *env) c.output_dir = env;
    if (!out_dir.empty()) c.output_dir = out_dir;
    if (threads > 0) {
      c.threads = threads;
    } else if (const char* env = std::getenv("LTCAR_THREADS"); env && *env) {
      c.threads = parse_threads(env, "LTCAR_THREADS");
    }

    io::OutputWriter writer(c.output_dir, c.hash, force);
    writer.write("config.json", c.canonical, meta("config").dump());
    if (tire_cmd->parsed()) return cmd_tire(c, writer, out);
    if (eq_cmd->parsed()) return cmd_equilibria(c, writer, out);
    if (sim_cmd->parsed()) return cmd_simulate(c, writer, out);
    if (exp_cmd->parsed()) return cmd_explore(c, writer, out, err);
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "ltcar: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "ltcar: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const IoError& e) {
    err << "ltcar: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "ltcar: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "ltcar: invalid setting: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "ltcar: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace ltcar::app
