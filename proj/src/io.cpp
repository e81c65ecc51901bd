#include "ltcar/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "ltcar/errors.hpp"

namespace ltcar::io {

namespace {

constexpr const char* kStateColumns[] = {"x", "y", "psi", "vx", "vy", "psidot"};
constexpr const char* kInputColumns[] = {"delta", "kappa_r", "kappa_f"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const std::string& where) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || cell.empty()) {
    throw IoError(where + ": '" + cell + "' is not a number");
  }
  return v;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string curve_csv(const trajopt::Curve& c, const Columns& extra) {
  for (const auto& [name, values] : extra) {
    if (values.size() != c.size()) {
      throw std::invalid_argument("column " + name + " has the wrong length");
    }
  }
  std::string out = "t,x,y,psi,vx,vy,psidot,delta,kappa_r,kappa_f";
  for (const auto& col : extra) out += "," + col.first;
  out += "\n";
  for (std::size_t k = 0; k < c.size(); ++k) {
    out += format_double(c.time(k));
    for (int i = 0; i < 6; ++i) out += "," + format_double(c.x[k][i]);
    for (int i = 0; i < 3; ++i) out += "," + format_double(c.u[k][i]);
    for (const auto& col : extra) out += "," + format_double(col.second[k]);
    out += "\n";
  }
  return out;
}

std::string branch_csv(const manifold::ManifoldBranch& b) {
  std::string out =
      "index,arclength,v,a_lat,beta,beta_r,beta_f,delta,kappa_r,mu_rx,ffz,frz,"
      "residual_norm\n";
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    const manifold::EquilibriumPoint& p = b.points[i];
    const double row[] = {b.arclength[i], p.v,       p.x.a_lat,   p.x.beta,
                          p.beta_r,       p.beta_f,  p.x.delta,   p.x.kappa_r,
                          p.mu_rx,        p.loads.ffz, p.loads.frz,
                          p.residual_norm};
    out += std::to_string(i);
    for (double v : row) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

TrajectoryTable parse_trajectory_csv(const std::string& text,
                                     const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError(origin + ": empty file");
  const std::vector<std::string> header = split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!col.emplace(header[i], i).second) {
      throw IoError(origin + ": duplicate column '" + header[i] + "'");
    }
  }
  auto require = [&](const char* name) {
    const auto it = col.find(name);
    if (it == col.end()) {
      throw IoError(origin + ": missing required column '" + name + "'");
    }
    return it->second;
  };
  const std::size_t ct = require("t");
  std::size_t cs[6];
  for (int i = 0; i < 6; ++i) cs[i] = require(kStateColumns[i]);
  std::optional<std::size_t> cu[3];
  TrajectoryTable tab;
  for (int i = 0; i < 3; ++i) {
    const auto it = col.find(kInputColumns[i]);
    if (it != col.end()) {
      cu[i] = it->second;
      tab.has_input[i] = true;
    }
  }

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split(line);
    const std::string where = origin + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) {
      throw IoError(where + ": expected " + std::to_string(header.size()) +
                    " fields, found " + std::to_string(cells.size()));
    }
    const double t = parse_number(cells[ct], where);
    if (!tab.t.empty() && !(t > tab.t.back())) {
      throw IoError(where + ": time is not strictly increasing");
    }
    Vec6 x;
    Vec3 u = Vec3::Zero();
    for (int i = 0; i < 6; ++i) x[i] = parse_number(cells[cs[i]], where);
    for (int i = 0; i < 3; ++i) {
      if (cu[i]) u[i] = parse_number(cells[*cu[i]], where);
    }
    if (!std::isfinite(t) || !x.allFinite() || !u.allFinite()) {
      throw IoError(where + ": non-finite value");
    }
    tab.t.push_back(t);
    tab.x.push_back(x);
    tab.u.push_back(u);
  }
  if (tab.t.empty()) throw IoError(origin + ": no data rows");
  return tab;
}

TrajectoryTable read_trajectory_csv(const std::filesystem::path& path) {
  return parse_trajectory_csv(read_file(path), path.string());
}

InputTable parse_input_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError(origin + ": empty file");
  const std::vector<std::string> header = split(line);
  std::optional<std::size_t> ct, cu[3];
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "t") ct = i;
    for (int j = 0; j < 3; ++j) {
      if (header[i] == kInputColumns[j]) cu[j] = i;
    }
  }
  if (!ct) throw IoError(origin + ": missing required column 't'");
  if (!cu[0] && !cu[1] && !cu[2]) {
    throw IoError(origin + ": needs at least one of delta, kappa_r, kappa_f");
  }
  InputTable tab;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split(line);
    const std::string where = origin + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) {
      throw IoError(where + ": expected " + std::to_string(header.size()) +
                    " fields, found " + std::to_string(cells.size()));
    }
    const double t = parse_number(cells[*ct], where);
    if (!tab.t.empty() && !(t > tab.t.back())) {
      throw IoError(where + ": time is not strictly increasing");
    }
    Vec3 u = Vec3::Zero();
    for (int j = 0; j < 3; ++j) {
      if (cu[j]) u[j] = parse_number(cells[*cu[j]], where);
    }
    if (!std::isfinite(t) || !u.allFinite()) {
      throw IoError(where + ": non-finite value");
    }
    tab.t.push_back(t);
    tab.u.push_back(u);
  }
  if (tab.t.empty()) throw IoError(origin + ": no data rows");
  return tab;
}

InputTable read_input_csv(const std::filesystem::path& path) {
  return parse_input_csv(read_file(path), path.string());
}

trajopt::Curve table_to_curve(const TrajectoryTable& table) {
  trajopt::Curve c;
  c.x = table.x;
  c.u = table.u;
  if (table.t.size() < 2) {
    c.dt = 1.0;
    return c;
  }
  c.dt = table.t[1] - table.t[0];
  for (std::size_t k = 1; k < table.t.size(); ++k) {
    const double expect = table.t[0] + static_cast<double>(k) * c.dt;
    if (std::abs(table.t[k] - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
      throw IoError("time grid is not uniform at row " + std::to_string(k + 1));
    }
  }
  return c;
}

OutputWriter::OutputWriter(std::filesystem::path dir, std::string config_hash,
                           bool force)
    : dir_(std::move(dir)), hash_(std::move(config_hash)), force_(force) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir_.string() + ": " +
                  ec.message());
  }
}

std::filesystem::path OutputWriter::write(const std::string& name,
                                          const std::string& contents,
                                          const std::string& meta_json) {
  const std::filesystem::path target = dir_ / name;
  const std::filesystem::path meta = dir_ / (name + ".meta.json");
  if (std::filesystem::exists(target) && !force_) {
    std::string previous;
    if (std::filesystem::exists(meta)) {
      try {
        previous = nlohmann::json::parse(read_file(meta)).value("config_hash", "");
      } catch (const nlohmann::json::exception&) {
      }
    }
    if (previous != hash_) {
      throw IoError("refusing to overwrite " + target.string() +
                    " produced by a different configuration (use --force)");
    }
  }
  nlohmann::json m = nlohmann::json::parse(meta_json);
  m["config_hash"] = hash_;
  m["file"] = name;
  auto put = [](const std::filesystem::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << data;
    out.close();
    if (!out) throw IoError("cannot write " + p.string());
  };
  put(target, contents);
  put(meta, m.dump(2) + "\n");
  return target;
}

std::string iterate_log_jsonl(const std::vector<trajopt::IterateRecord>& log) {
  std::string out;
  for (const auto& r : log) {
    nlohmann::json j = {{"iter", r.iter},
                        {"cost", r.cost},
                        {"grad_zeta", r.grad_zeta},
                        {"gamma", r.gamma}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace ltcar::io
