#pragma once

// Flat key = value scenario configuration. '#' starts a comment; lists are
// comma-separated.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dumbbell/error.hpp"

namespace dumbbell::experiments {

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"scaling", "gap",      "plateau", "collar",        "harmonic-approx",
                                              "nodal",   "mollify",  "morse",   "oracle-compare"};
  return names;
}

/// Verdict thresholds. The defaults are the acceptance values.
struct Thresholds {
  double slope_min = 0.40;
  double slope_max = 0.60;
  double oracle_slope_min = 0.45;
  double oracle_slope_max = 0.55;
  double sandwich_slack = 0.0;
  double volume = 1e-12;
  double gap_relative = 0.15;
  double gap_ratio = 10.0;
  double plateau = 0.05;
  double collar = 0.05;
  double monotone_slack = 0.05;
  int monotone_glitches = 1;
  double flat_harmonic = 1e-8;
  double halving_factor = 1.5;
  double fourier_relative = 1e-4;
  double fourier_fem = 0.02;
  double fourier_halving_min = 1.5;
  double fourier_halving_max = 2.5;
  double gradient_margin = 0.5;
  double oracle_relative = 0.02;
  double mollify_relative = 0.01;
  double mollify_vector = 0.02;
};

struct ScenarioConfig {
  std::string scenario = "scaling";
  std::string scene = "box";  // box | warped_box | file
  std::string mesh_path;
  int d = 3;
  std::vector<int> n{16};
  double sigma_offset = 0.5;
  double eta = 0.125;
  std::vector<double> epsilons{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  double warp_slope = 1.0;          // w(rho) = 1 + warp_slope * rho
  double tol = 1e-8;                // eigensolver residual tolerance
  double fourier_tol = 1e-10;
  int oracle_cells = 1024;
  int fourier_modes = 64;
  std::vector<double> etas{0.2, 0.1, 0.05};
  std::vector<int> warped_n{40, 8, 8};
  std::vector<int> fourier_cross{1, 1};
  std::vector<double> widths{4, 2, 1};  // mollifier widths in mesh spacings
  int reference_n = 16;                 // isotropic report-only mollify run
  int morse_n = 32;                         // cosine grid points per unit length
  std::vector<double> morse_extent{2.0, 1.0};  // periodic cosine domain
  int torus_n = 32;
  double torus_major = 0.25;
  double torus_minor = 0.15;
  double torus_eta = 0.05;
  double torus_epsilon = 1e-2;
  std::uint64_t seed = 0x5eed;
  int workers = 1;
  std::string out = "out";
  Thresholds thresholds;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "not a number: '" + s + "'");
  }
}

inline long to_long(const std::string& s, int line) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(line, "not an integer: '" + s + "'");
  return v;
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& s, int line, F&& convert) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) out.push_back(static_cast<T>(convert(item, line)));
  if (out.empty()) throw ParseError(line, "empty list");
  return out;
}

}  // namespace detail

/// Checks ranges and names; throws ConfigError.
inline void validate(const ScenarioConfig& cfg) {
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), cfg.scenario) == names.end()) {
    throw ConfigError("unknown scenario '" + cfg.scenario + "'");
  }
  if (cfg.scene != "box" && cfg.scene != "warped_box" && cfg.scene != "file") {
    throw ConfigError("unknown scene '" + cfg.scene + "'");
  }
  if (cfg.scene == "file" && cfg.mesh_path.empty()) throw ConfigError("scene = file needs mesh");
  if (cfg.d != 2 && cfg.d != 3) throw ConfigError("d must be 2 or 3");
  for (int v : cfg.n) {
    if (v < 1) throw ConfigError("n must be positive");
  }
  if (cfg.n.size() != 1 && static_cast<int>(cfg.n.size()) != cfg.d) throw ConfigError("n needs 1 or d entries");
  if (!(cfg.eta > 0.0)) throw ConfigError("eta must be positive");
  if (cfg.epsilons.empty()) throw ConfigError("epsilons is empty");
  for (double e : cfg.epsilons) {
    if (!(e > 0.0) || e > 1.0) throw ConfigError("epsilon out of (0, 1]: " + std::to_string(e));
  }
  for (double e : cfg.etas) {
    if (!(e > 0.0)) throw ConfigError("etas must be positive");
  }
  if (cfg.oracle_cells < 64) throw ConfigError("oracle_cells must be at least 64");
  if (cfg.fourier_modes < 1) throw ConfigError("fourier_modes must be positive");
  if (cfg.workers < 1) throw ConfigError("workers must be positive");
  if (cfg.morse_extent.size() != 2 || !(cfg.morse_extent[0] > 0.0) || !(cfg.morse_extent[1] > 0.0)) {
    throw ConfigError("morse_extent needs two positive lengths");
  }
}

/// Parses key = value lines on top of the defaults. Unknown keys are errors.
inline ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig cfg;
  auto& t = cfg.thresholds;
  using Setter = std::function<void(const std::string&, int)>;
  auto real = [](double& dst) -> Setter { return [&dst](const std::string& v, int l) { dst = detail::to_double(v, l); }; };
  auto integer = [](int& dst) -> Setter {
    return [&dst](const std::string& v, int l) { dst = static_cast<int>(detail::to_long(v, l)); };
  };
  auto text = [](std::string& dst) -> Setter { return [&dst](const std::string& v, int) { dst = v; }; };
  auto reals = [](std::vector<double>& dst) -> Setter {
    return [&dst](const std::string& v, int l) { dst = detail::parse_list<double>(v, l, detail::to_double); };
  };
  auto ints = [](std::vector<int>& dst) -> Setter {
    return [&dst](const std::string& v, int l) { dst = detail::parse_list<int>(v, l, detail::to_long); };
  };
  auto range = [](double& lo, double& hi) -> Setter {
    return [&lo, &hi](const std::string& v, int l) {
      const auto r = detail::parse_list<double>(v, l, detail::to_double);
      if (r.size() != 2) throw ParseError(l, "range needs two values");
      lo = r[0];
      hi = r[1];
    };
  };

  const std::map<std::string, Setter> keys{
      {"scenario", text(cfg.scenario)},
      {"scene", text(cfg.scene)},
      {"mesh", text(cfg.mesh_path)},
      {"d", integer(cfg.d)},
      {"n", ints(cfg.n)},
      {"sigma_offset", real(cfg.sigma_offset)},
      {"eta", real(cfg.eta)},
      {"epsilons", reals(cfg.epsilons)},
      {"warp_slope", real(cfg.warp_slope)},
      {"tol", real(cfg.tol)},
      {"fourier_tol", real(cfg.fourier_tol)},
      {"oracle_cells", integer(cfg.oracle_cells)},
      {"fourier_modes", integer(cfg.fourier_modes)},
      {"etas", reals(cfg.etas)},
      {"warped_n", ints(cfg.warped_n)},
      {"fourier_cross", ints(cfg.fourier_cross)},
      {"widths", reals(cfg.widths)},
      {"reference_n", integer(cfg.reference_n)},
      {"morse_n", integer(cfg.morse_n)},
      {"morse_extent", reals(cfg.morse_extent)},
      {"torus_n", integer(cfg.torus_n)},
      {"torus_major", real(cfg.torus_major)},
      {"torus_minor", real(cfg.torus_minor)},
      {"torus_eta", real(cfg.torus_eta)},
      {"torus_epsilon", real(cfg.torus_epsilon)},
      {"seed", [&cfg](const std::string& v, int l) { cfg.seed = static_cast<std::uint64_t>(detail::to_long(v, l)); }},
      {"workers", integer(cfg.workers)},
      {"out", text(cfg.out)},
      {"slope_range", range(t.slope_min, t.slope_max)},
      {"oracle_slope_range", range(t.oracle_slope_min, t.oracle_slope_max)},
      {"sandwich_slack", real(t.sandwich_slack)},
      {"volume_tolerance", real(t.volume)},
      {"gap_tolerance", real(t.gap_relative)},
      {"gap_ratio_min", real(t.gap_ratio)},
      {"plateau_tolerance", real(t.plateau)},
      {"collar_tolerance", real(t.collar)},
      {"monotone_slack", real(t.monotone_slack)},
      {"monotone_glitches", integer(t.monotone_glitches)},
      {"flat_harmonic_tolerance", real(t.flat_harmonic)},
      {"halving_factor", real(t.halving_factor)},
      {"fourier_tolerance", real(t.fourier_relative)},
      {"fourier_fem_tolerance", real(t.fourier_fem)},
      {"fourier_halving_range", range(t.fourier_halving_min, t.fourier_halving_max)},
      {"gradient_margin", real(t.gradient_margin)},
      {"oracle_tolerance", real(t.oracle_relative)},
      {"mollify_tolerance", real(t.mollify_relative)},
      {"mollify_vector_tolerance", real(t.mollify_vector)},
  };

  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    raw = detail::trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected key = value");
    const std::string key = detail::trim(raw.substr(0, eq));
    const std::string value = detail::trim(raw.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) throw ParseError(line, "unknown key '" + key + "'");
    if (value.empty()) throw ParseError(line, "missing value for '" + key + "'");
    it->second(value, line);
  }
  validate(cfg);
  return cfg;
}

inline ScenarioConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in);
}

/// Echo of every field in a stable order.
inline nlohmann::ordered_json to_json(const ScenarioConfig& c) {
  const auto& t = c.thresholds;
  nlohmann::ordered_json j;
  j["scenario"] = c.scenario;
  j["scene"] = c.scene;
  if (!c.mesh_path.empty()) j["mesh"] = c.mesh_path;
  j["d"] = c.d;
  j["n"] = c.n;
  j["sigma_offset"] = c.sigma_offset;
  j["eta"] = c.eta;
  j["epsilons"] = c.epsilons;
  j["warp_slope"] = c.warp_slope;
  j["tol"] = c.tol;
  j["fourier_tol"] = c.fourier_tol;
  j["oracle_cells"] = c.oracle_cells;
  j["fourier_modes"] = c.fourier_modes;
  j["etas"] = c.etas;
  j["warped_n"] = c.warped_n;
  j["fourier_cross"] = c.fourier_cross;
  j["widths"] = c.widths;
  j["reference_n"] = c.reference_n;
  j["morse_n"] = c.morse_n;
  j["morse_extent"] = c.morse_extent;
  j["torus_n"] = c.torus_n;
  j["torus_major"] = c.torus_major;
  j["torus_minor"] = c.torus_minor;
  j["torus_eta"] = c.torus_eta;
  j["torus_epsilon"] = c.torus_epsilon;
  j["seed"] = c.seed;
  nlohmann::ordered_json th;
  th["slope_range"] = {t.slope_min, t.slope_max};
  th["oracle_slope_range"] = {t.oracle_slope_min, t.oracle_slope_max};
  th["sandwich_slack"] = t.sandwich_slack;
  th["volume_tolerance"] = t.volume;
  th["gap_tolerance"] = t.gap_relative;
  th["gap_ratio_min"] = t.gap_ratio;
  th["plateau_tolerance"] = t.plateau;
  th["collar_tolerance"] = t.collar;
  th["monotone_slack"] = t.monotone_slack;
  th["monotone_glitches"] = t.monotone_glitches;
  th["flat_harmonic_tolerance"] = t.flat_harmonic;
  th["halving_factor"] = t.halving_factor;
  th["fourier_tolerance"] = t.fourier_relative;
  th["fourier_fem_tolerance"] = t.fourier_fem;
  th["fourier_halving_range"] = {t.fourier_halving_min, t.fourier_halving_max};
  th["gradient_margin"] = t.gradient_margin;
  th["oracle_tolerance"] = t.oracle_relative;
  th["mollify_tolerance"] = t.mollify_relative;
  th["mollify_vector_tolerance"] = t.mollify_vector;
  j["thresholds"] = th;
  return j;
}

}  // namespace dumbbell::experiments
