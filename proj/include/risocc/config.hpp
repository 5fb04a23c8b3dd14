#pragma once

// Scenario configuration: presets, JSON loading with strict key checking,
// validation and the resolved snapshot written next to every result.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "risocc/geometry.hpp"

namespace risocc {

enum class ConfigErrorKind { UnknownKey, OutOfRange, Malformed, Unreadable };

inline const char* to_string(ConfigErrorKind kind) {
  switch (kind) {
    case ConfigErrorKind::UnknownKey: return "unknown_key";
    case ConfigErrorKind::OutOfRange: return "out_of_range";
    case ConfigErrorKind::Malformed: return "malformed";
    case ConfigErrorKind::Unreadable: return "unreadable";
  }
  return "unknown";
}

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrorKind kind, std::string key, const std::string& message)
      : std::runtime_error(message), kind_(kind), key_(std::move(key)) {}

  ConfigErrorKind kind() const { return kind_; }
  const std::string& key() const { return key_; }

 private:
  ConfigErrorKind kind_;
  std::string key_;
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

using Range = std::array<double, 2>;

struct ScenarioConfig {
  std::string preset = "paper";

  int bs_antennas = 128;
  int ris_horizontal = 11;
  int ris_vertical = 11;
  int users = 3;
  int block_length = 1000;
  double spacing_h_m = 0.15;
  double spacing_v_m = 0.15;
  double wavelength_m = 0.3;
  double power_dbm = 10.0;
  double noise_dbm = -104.0;
  double rician_kappa = 2.0;
  double los_azimuth_deg = 30.0;
  double los_elevation_deg = 10.0;
  double rho = 0.5;
  double epsilon = 0.0;

  Range azimuth_range_deg{-60.0, 60.0};
  Range elevation_range_deg{-60.0, 60.0};
  Range distance_range_m{1.0, 20.0};
  double min_separation_deg = 10.0;
  bool full_angular_domain = false;
  std::string modulation = "gaussian";
  std::string receive_model = "near_field";

  std::uint64_t seed = 1;
  int trials = 100;
  std::vector<double> power_sweep_dbm{-10.0, 0.0, 10.0, 20.0, 30.0};

  double grid_angle_step_deg = 1.0;
  double grid_distance_step_m = 0.1;
  Range grid_distance_range_m{0.5, 25.0};
  int peak_separation_cells = 3;
  bool refine_estimates = true;

  int max_iters = 500;
  double grad_tol = 1e-6;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  double armijo_init_step = 1.0;
  int armijo_max_backtracks = 50;

  static ScenarioConfig paper() { return {}; }

  static ScenarioConfig desk() {
    ScenarioConfig c;
    c.preset = "desk";
    c.bs_antennas = 32;
    c.ris_horizontal = 7;
    c.ris_vertical = 7;
    c.users = 2;
    c.block_length = 500;
    return c;
  }

  static ScenarioConfig from_preset(const std::string& name) {
    if (name == "paper") return paper();
    if (name == "desk") return desk();
    throw ConfigError(ConfigErrorKind::OutOfRange, "preset", "preset must be 'paper' or 'desk', got '" + name + "'");
  }

  AngularDomain domain() const { return full_angular_domain ? AngularDomain::Full : AngularDomain::Front; }

  RisGeometry geometry() const {
    return RisGeometry::make(ris_horizontal, ris_vertical, spacing_h_m, spacing_v_m, wavelength_m);
  }

  double power_watts() const { return dbm_to_watts(power_dbm); }
  double noise_watts() const { return dbm_to_watts(noise_dbm); }

  void validate() const;
};

namespace detail {

inline void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(ConfigErrorKind::OutOfRange, key, std::string(key) + ": " + what);
}

}  // namespace detail

inline void ScenarioConfig::validate() const {
  using detail::require;
  require(preset == "paper" || preset == "desk", "preset", "must be 'paper' or 'desk'");
  require(bs_antennas >= 1, "bs_antennas", "must be positive");
  require(ris_horizontal >= 1 && ris_horizontal % 2 == 1, "ris_horizontal", "must be odd and positive");
  require(ris_vertical >= 1 && ris_vertical % 2 == 1, "ris_vertical", "must be odd and positive");
  require(users >= 1, "users", "must be at least 1");
  require(users < bs_antennas, "users", "must be smaller than bs_antennas for subspace sensing");
  require(users <= 8, "users", "must be at most 8");
  require(block_length >= 1, "block_length", "must be positive");
  require(spacing_h_m > 0.0, "spacing_h_m", "must be positive");
  require(spacing_v_m > 0.0, "spacing_v_m", "must be positive");
  require(wavelength_m > 0.0, "wavelength_m", "must be positive");
  require(std::isfinite(power_dbm), "power_dbm", "must be finite");
  require(std::isfinite(noise_dbm), "noise_dbm", "must be finite");
  require(rician_kappa >= 0.0, "rician_kappa", "must be non-negative");
  require(rho >= 0.0 && rho <= 1.0, "rho", "must lie in [0, 1]");
  require(epsilon >= 0.0, "epsilon", "must be non-negative");

  const double limit = full_angular_domain ? 180.0 : 90.0;
  require(azimuth_range_deg[0] < azimuth_range_deg[1] && azimuth_range_deg[0] >= -limit &&
              azimuth_range_deg[1] < limit,
          "azimuth_range_deg", "must be an increasing pair inside the angular domain");
  require(elevation_range_deg[0] < elevation_range_deg[1] && elevation_range_deg[0] >= -limit &&
              elevation_range_deg[1] < limit,
          "elevation_range_deg", "must be an increasing pair inside the angular domain");
  require(distance_range_m[0] > 0.0 && distance_range_m[0] < distance_range_m[1], "distance_range_m",
          "must be an increasing pair of positive distances");
  require(min_separation_deg >= 0.0 && min_separation_deg < 90.0, "min_separation_deg", "must lie in [0, 90)");
  require(modulation == "gaussian" || modulation == "qpsk", "modulation", "must be 'gaussian' or 'qpsk'");
  require(receive_model == "near_field" || receive_model == "phase_only", "receive_model",
          "must be 'near_field' or 'phase_only'");
  require(trials >= 1, "trials", "must be at least 1");
  require(!power_sweep_dbm.empty(), "power_sweep_dbm", "needs at least one power");
  for (double p : power_sweep_dbm) require(std::isfinite(p), "power_sweep_dbm", "entries must be finite");
  require(grid_angle_step_deg > 0.0 && grid_angle_step_deg <= 45.0, "grid_angle_step_deg", "must lie in (0, 45]");
  require(grid_distance_step_m > 0.0, "grid_distance_step_m", "must be positive");
  require(grid_distance_range_m[0] > 0.0 &&
              grid_distance_range_m[1] - grid_distance_range_m[0] >= grid_distance_step_m,
          "grid_distance_range_m", "must be positive and span at least two samples");
  require(peak_separation_cells >= 0, "peak_separation_cells", "must be non-negative");
  require(max_iters >= 0, "max_iters", "must be non-negative");
  require(grad_tol >= 0.0, "grad_tol", "must be non-negative");
  require(armijo_c > 0.0 && armijo_c < 1.0, "armijo_c", "must lie in (0, 1)");
  require(armijo_shrink > 0.0 && armijo_shrink < 1.0, "armijo_shrink", "must lie in (0, 1)");
  require(armijo_init_step > 0.0, "armijo_init_step", "must be positive");
  require(armijo_max_backtracks >= 0, "armijo_max_backtracks", "must be non-negative");
}

// Every numeric knob, in a fixed order; the snapshot and the loader share it.
#define RISOCC_CONFIG_FIELDS(X)                                                     \
  X(preset) X(bs_antennas) X(ris_horizontal) X(ris_vertical) X(users) X(block_length) \
  X(spacing_h_m) X(spacing_v_m) X(wavelength_m) X(power_dbm) X(noise_dbm)          \
  X(rician_kappa) X(los_azimuth_deg) X(los_elevation_deg) X(rho) X(epsilon)        \
  X(azimuth_range_deg) X(elevation_range_deg) X(distance_range_m)                  \
  X(min_separation_deg) X(full_angular_domain) X(modulation) X(receive_model)      \
  X(seed) X(trials) X(power_sweep_dbm) X(grid_angle_step_deg)                      \
  X(grid_distance_step_m) X(grid_distance_range_m) X(peak_separation_cells)        \
  X(refine_estimates) X(max_iters) X(grad_tol) X(armijo_c) X(armijo_shrink)        \
  X(armijo_init_step) X(armijo_max_backtracks)

inline nlohmann::ordered_json to_json(const ScenarioConfig& c) {
  nlohmann::ordered_json j;
#define RISOCC_PUT(name) j[#name] = c.name;
  RISOCC_CONFIG_FIELDS(RISOCC_PUT)
#undef RISOCC_PUT
  return j;
}

/// Overlays the keys of `j` onto `c`. Unknown keys and type mismatches are
/// reported with the offending key.
inline void apply_json(ScenarioConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError(ConfigErrorKind::Malformed, "", "config root must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
#define RISOCC_GET(name)                                                                        \
  if (key == #name) {                                                                           \
    known = true;                                                                               \
    try {                                                                                       \
      value.get_to(c.name);                                                                     \
    } catch (const nlohmann::json::exception& e) {                                              \
      throw ConfigError(ConfigErrorKind::Malformed, key, key + ": wrong type (" + e.what() + ")"); \
    }                                                                                           \
  }
    RISOCC_CONFIG_FIELDS(RISOCC_GET)
#undef RISOCC_GET
    if (!known) throw ConfigError(ConfigErrorKind::UnknownKey, key, "unknown configuration key '" + key + "'");
  }
}

inline nlohmann::json parse_config_text(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(ConfigErrorKind::Malformed, "", std::string("config is not valid JSON: ") + e.what());
  }
}

inline nlohmann::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigErrorKind::Unreadable, "", "cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// Values given on the command line; each one beats the file and the preset.
struct ConfigOverrides {
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
};

/// Resolution order: flags > config file > preset defaults (paper unless a
/// preset is named by flag or file).
inline ScenarioConfig resolve_config(const nlohmann::json& file, const ConfigOverrides& flags) {
  if (!file.is_object()) throw ConfigError(ConfigErrorKind::Malformed, "", "config root must be a JSON object");
  std::string preset = "paper";
  if (file.contains("preset")) {
    if (!file["preset"].is_string()) throw ConfigError(ConfigErrorKind::Malformed, "preset", "preset: wrong type");
    preset = file["preset"].get<std::string>();
  }
  if (flags.preset) preset = *flags.preset;
  ScenarioConfig c = ScenarioConfig::from_preset(preset);
  apply_json(c, file);
  c.preset = preset;
  if (flags.seed) c.seed = *flags.seed;
  if (flags.trials) c.trials = *flags.trials;
  c.validate();
  return c;
}

inline ScenarioConfig parse_config(const std::optional<std::string>& path, const ConfigOverrides& flags = {}) {
  return resolve_config(path ? read_config_file(*path) : nlohmann::json::object(), flags);
}

}  // namespace risocc
