#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fickkin/mixture.hpp"
#include "fickkin/velocity_grid.hpp"

namespace fickkin {

/// Flat "key = value" file. `[section]` lines prefix the following keys with
/// "section."; '#' starts a comment. Lists are comma or blank separated.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return values_; }

  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  double number(const std::string& key) const;
  long integer(const std::string& key, long fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> list(const std::string& key) const;
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;

  /// Throws a config error naming the first key outside `known`.
  void require_known(const std::set<std::string>& known) const;

  /// Hash of the canonical (sorted) entries, excluding `ignored` keys.
  std::uint64_t hash(const std::set<std::string>& ignored = {}) const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

struct RunConfig {
  // mixture
  std::vector<double> masses;
  std::vector<double> c_phi;  // row-major N x N
  double gamma = 0.0;
  std::string angular = "constant";
  double b_param = 1.0;
  int d = 2;
  std::vector<double> n;  // n_inf, default all ones

  // velocity grid, rv <= 0 selects the default truncation
  double rv = 6.0;
  int mv = 24;
  int angular_count = 16;

  // fick solver
  double dt = 1e-4;
  double t_end = 0.05;
  int s = 1;
  std::string matrix_mode = "frozen";
  int cells = 128;
  int dx = 1;
  int mode = 1;
  double amplitude = 0.05;
  double delta = 0.5;
  double delta_s = 1.0;
  double quant_step = 1e-2;

  // kinetic
  std::vector<double> eps = {0.2, 0.1, 0.05};
  double kin_t_end = 0.05;
  int kin_cells = 32;
  double dt_factor = 0.1;
  bool well_prepared = true;
  double kin_amplitude = 0.1;
  int kin_mode = 1;
  double c_fluid = 1.0;
  double delta_fluid = 10.0;

  // constants
  double c2 = 1.0;
  std::vector<double> cphi_lower;
  std::vector<double> c_b;
  std::vector<double> r;
  bool constants_operator = true;

  std::string out_dir = "out";
  std::string cache_dir;  // default <out_dir>/cache
  std::uint64_t seed = 0;
  std::uint64_t hash = 0;

  int species() const { return static_cast<int>(masses.size()); }
};

/// Validates the schema and fills defaults. Throws config errors.
RunConfig make_run_config(const KeyValueConfig& kv);
RunConfig load_run_config(const std::string& path);

Mixture make_mixture(const RunConfig& cfg);
VelocityGrid make_grid(const RunConfig& cfg, const Mixture& mix);
Eigen::VectorXd concentrations(const RunConfig& cfg);

/// Unit perturbation direction orthogonal to m (closure), max |w_i| = 1.
Eigen::VectorXd closure_direction(const Eigen::VectorXd& m);

}  // namespace fickkin
