#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ltcar/manifold.hpp"
#include "ltcar/trajopt.hpp"

namespace ltcar::io {

/// Lossless decimal form of a double (17 significant digits).
std::string format_double(double v);

/// 64-bit FNV-1a hash, printed as 16 hex digits.
std::uint64_t fnv1a64(std::string_view data);
std::string hash_hex(std::uint64_t h);

/// Named extra columns appended after the standard ones.
using Columns = std::vector<std::pair<std::string, std::vector<double>>>;

/// Columns t, x, y, psi, vx, vy, psidot, delta, kappa_r, kappa_f, then extras.
std::string curve_csv(const trajopt::Curve& c, const Columns& extra = {});

/// Columns index, arclength, v, a_lat, beta, beta_r, beta_f, delta, kappa_r,
/// mu_rx, ffz, frz, residual_norm.
std::string branch_csv(const manifold::ManifoldBranch& b);

/// A trajectory CSV read back by header name. State columns are required;
/// input columns may be absent (has_input false, values zero).
struct TrajectoryTable {
  std::vector<double> t;
  std::vector<Vec6> x;
  std::vector<Vec3> u;
  std::array<bool, 3> has_input{false, false, false};
};

/// Throws IoError on unreadable or malformed files and non-increasing time.
TrajectoryTable read_trajectory_csv(const std::filesystem::path& path);
TrajectoryTable parse_trajectory_csv(const std::string& text,
                                     const std::string& origin = "<string>");

/// Input schedule: column t plus any of delta, kappa_r, kappa_f (at least
/// one); absent inputs are zero. Throws IoError like the trajectory reader.
struct InputTable {
  std::vector<double> t;
  std::vector<Vec3> u;
};
InputTable parse_input_csv(const std::string& text,
                           const std::string& origin = "<string>");
InputTable read_input_csv(const std::filesystem::path& path);

/// Curve on the table's own grid; requires a uniform time step (relative
/// tolerance 1e-9). Throws IoError otherwise.
trajopt::Curve table_to_curve(const TrajectoryTable& table);

/// Output file guarded by a metadata sidecar `<file>.meta.json` that records
/// the configuration hash. Writing over a file whose sidecar carries a
/// different hash needs force; throws IoError otherwise or on write errors.
class OutputWriter {
 public:
  OutputWriter(std::filesystem::path dir, std::string config_hash, bool force);

  const std::filesystem::path& dir() const { return dir_; }

  /// Writes `name` under the output directory plus its sidecar, whose JSON
  /// object is `meta` extended with the hash and file name.
  std::filesystem::path write(const std::string& name,
                              const std::string& contents,
                              const std::string& meta_json = "{}");

 private:
  std::filesystem::path dir_;
  std::string hash_;
  bool force_;
};

/// One JSON object per line: {"iter", "cost", "grad_zeta", "gamma"}.
std::string iterate_log_jsonl(const std::vector<trajopt::IterateRecord>& log);

}  // namespace ltcar::io
