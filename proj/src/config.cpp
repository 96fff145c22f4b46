#include "fickkin/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fickkin/errors.hpp"
#include "fickkin/hash.hpp"

namespace fickkin {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) return s.substr(1, s.size() - 2);
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw config_error("key '" + key + "': '" + v + "' is not a number");
  return x;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> k = {
      "species.count", "species.masses", "species.n", "kernel.c_phi", "kernel.gamma", "kernel.angular", "kernel.b",
      "kernel.d", "grid.rv", "grid.mv", "grid.angular", "solver.dt", "solver.t_end", "solver.s",
      "solver.matrix_mode", "solver.cells", "solver.dim", "solver.mode", "solver.amplitude", "solver.delta",
      "solver.delta_s", "solver.quant_step", "kinetic.eps", "kinetic.t_end", "kinetic.cells", "kinetic.dt_factor",
      "kinetic.well_prepared", "kinetic.amplitude", "kinetic.mode", "kinetic.c_fluid", "kinetic.delta_fluid",
      "constants.c2", "constants.c_phi", "constants.c_b", "constants.r", "constants.operator", "output.dir",
      "cache.dir", "seed"};
  return k;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& origin) {
  KeyValueConfig c;
  c.origin_ = origin;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw config_error(origin + ":" + std::to_string(lineno) + ": unterminated section");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (c.values_.count(key)) throw config_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    c.values_[key] = unquote(trim(std::string_view(line).substr(eq + 1)));
  }
  return c;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

std::string KeyValueConfig::text(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::number(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw config_error("missing key '" + key + "'");
  return to_double(key, it->second);
}

double KeyValueConfig::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long KeyValueConfig::integer(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const double x = number(key);
  if (x != static_cast<double>(static_cast<long>(x))) throw config_error("key '" + key + "' must be an integer");
  return static_cast<long>(x);
}

bool KeyValueConfig::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = values_.at(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw config_error("key '" + key + "' must be a boolean");
}

std::vector<double> KeyValueConfig::list(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw config_error("missing key '" + key + "'");
  std::string v = it->second;
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::replace(v.begin(), v.end(), ',', ' ');
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(key, tok));
  if (out.empty()) throw config_error("key '" + key + "' is an empty list");
  return out;
}

std::vector<double> KeyValueConfig::list(const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? list(key) : fallback;
}

void KeyValueConfig::require_known(const std::set<std::string>& known) const {
  for (const auto& [k, v] : values_)
    if (!known.count(k)) throw config_error(origin_ + ": unknown key '" + k + "'");
}

std::uint64_t KeyValueConfig::hash(const std::set<std::string>& ignored) const {
  Fnv1a h;
  for (const auto& [k, v] : values_) {
    if (ignored.count(k)) continue;
    h.add(k).add(std::string_view("=")).add(v).add(std::string_view("\n"));
  }
  return h.value();
}

RunConfig make_run_config(const KeyValueConfig& kv) {
  kv.require_known(known_keys());
  RunConfig c;
  c.masses = kv.list("species.masses");
  const int N = c.species();
  if (kv.has("species.count") && kv.integer("species.count", N) != N)
    throw config_error("species.count does not match species.masses");
  for (double m : c.masses)
    if (!(m > 0.0)) throw config_error("species.masses must be positive");
  c.n = kv.list("species.n", std::vector<double>(N, 1.0));
  if (static_cast<int>(c.n.size()) != N) throw config_error("species.n must have one entry per species");
  for (double x : c.n)
    if (!(x > 0.0)) throw config_error("species.n must be positive");
  c.c_phi = kv.list("kernel.c_phi", std::vector<double>(static_cast<std::size_t>(N) * N, 1.0));
  if (static_cast<int>(c.c_phi.size()) != N * N) throw config_error("kernel.c_phi must hold N*N entries");
  c.gamma = kv.number("kernel.gamma", 0.0);
  c.angular = kv.text("kernel.angular", "constant");
  if (c.angular != "grad" && c.angular != "constant") throw config_error("kernel.angular must be grad or constant");
  c.b_param = kv.number("kernel.b", 1.0);
  c.d = static_cast<int>(kv.integer("kernel.d", 2));
  if (c.d != 1 && c.d != 2) throw config_error("kernel.d must be 1 or 2");

  c.rv = kv.number("grid.rv", 6.0);
  c.mv = static_cast<int>(kv.integer("grid.mv", 24));
  c.angular_count = static_cast<int>(kv.integer("grid.angular", 16));

  c.dt = kv.number("solver.dt", c.dt);
  c.t_end = kv.number("solver.t_end", c.t_end);
  c.s = static_cast<int>(kv.integer("solver.s", c.s));
  c.matrix_mode = kv.text("solver.matrix_mode", c.matrix_mode);
  if (c.matrix_mode != "frozen" && c.matrix_mode != "quasilinear")
    throw config_error("solver.matrix_mode must be frozen or quasilinear");
  c.cells = static_cast<int>(kv.integer("solver.cells", c.cells));
  c.dx = static_cast<int>(kv.integer("solver.dim", c.dx));
  c.mode = static_cast<int>(kv.integer("solver.mode", c.mode));
  c.amplitude = kv.number("solver.amplitude", c.amplitude);
  c.delta = kv.number("solver.delta", c.delta);
  c.delta_s = kv.number("solver.delta_s", c.delta_s);
  c.quant_step = kv.number("solver.quant_step", c.quant_step);
  if (!(c.dt > 0.0) || !(c.t_end > 0.0)) throw config_error("solver.dt and solver.t_end must be positive");
  if (c.s < 0) throw config_error("solver.s must be non-negative");
  if (c.mode < 1) throw config_error("solver.mode must be a positive wavenumber");

  c.eps = kv.list("kinetic.eps", c.eps);
  c.kin_t_end = kv.number("kinetic.t_end", c.kin_t_end);
  c.kin_cells = static_cast<int>(kv.integer("kinetic.cells", c.kin_cells));
  c.dt_factor = kv.number("kinetic.dt_factor", c.dt_factor);
  c.well_prepared = kv.boolean("kinetic.well_prepared", c.well_prepared);
  c.kin_amplitude = kv.number("kinetic.amplitude", c.kin_amplitude);
  c.kin_mode = static_cast<int>(kv.integer("kinetic.mode", c.kin_mode));
  c.c_fluid = kv.number("kinetic.c_fluid", c.c_fluid);
  c.delta_fluid = kv.number("kinetic.delta_fluid", c.delta_fluid);
  for (double e : c.eps)
    if (!(e > 0.0) || e > 1.0) throw config_error("kinetic.eps values must lie in (0, 1]");
  if (c.kin_mode < 1) throw config_error("kinetic.mode must be a positive wavenumber");

  c.c2 = kv.number("constants.c2", c.c2);
  if (!(c.c2 > 0.0)) throw config_error("constants.c2 must be positive");
  c.cphi_lower = kv.list("constants.c_phi", {});
  c.c_b = kv.list("constants.c_b", {});
  c.r = kv.list("constants.r", {});
  c.constants_operator = kv.boolean("constants.operator", true);

  c.out_dir = kv.text("output.dir", c.out_dir);
  c.cache_dir = kv.text("cache.dir", c.out_dir + "/cache");
  if (kv.has("seed")) {
    const std::string v = kv.text("seed", "0");
    std::uint64_t seed = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
    if (ec != std::errc() || p != v.data() + v.size()) throw config_error("seed must be an unsigned integer");
    c.seed = seed;
  }
  c.hash = kv.hash({"output.dir", "cache.dir"});
  return c;
}

RunConfig load_run_config(const std::string& path) { return make_run_config(KeyValueConfig::load(path)); }

Mixture make_mixture(const RunConfig& cfg) {
  const int N = cfg.species();
  Eigen::VectorXd m = Eigen::Map<const Eigen::VectorXd>(cfg.masses.data(), N);
  Eigen::MatrixXd C(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) C(i, j) = cfg.c_phi[static_cast<std::size_t>(i) * N + j];
  Mixture mix(m, C, cfg.gamma, cfg.angular == "grad" ? AngularProfile::Grad : AngularProfile::Constant, cfg.d,
              cfg.b_param);
  require_valid(mix);
  return mix;
}

VelocityGrid make_grid(const RunConfig& cfg, const Mixture& mix) {
  return build_grid(cfg.d, cfg.rv > 0.0 ? cfg.rv : default_rv(mix), cfg.mv, cfg.angular_count);
}

Eigen::VectorXd concentrations(const RunConfig& cfg) {
  return Eigen::Map<const Eigen::VectorXd>(cfg.n.data(), static_cast<Eigen::Index>(cfg.n.size()));
}

Eigen::VectorXd closure_direction(const Eigen::VectorXd& m) {
  if (m.size() < 2) throw config_error("closure_direction needs two or more species");
  const Eigen::Index N = m.size();
  // 1..N first, then unit vectors when 1..N is (nearly) parallel to m.
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(N, 1.0, static_cast<double>(N));
  for (Eigen::Index k = -1; k < N; ++k) {
    if (k >= 0) v = Eigen::VectorXd::Unit(N, k);
    const Eigen::VectorXd w = v - (m.dot(v) / m.squaredNorm()) * m;
    if (w.norm() > 0.1 * v.norm()) return w / w.cwiseAbs().maxCoeff();
  }
  throw domain_error("closure_direction: no direction orthogonal to the masses");
}

}  // namespace fickkin
