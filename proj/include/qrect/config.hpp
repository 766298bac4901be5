#pragma once

// Run configuration: a flat key = value file with optional [section]
// headers, overridable key by key from the command line.
//
// Grammar (one item per line):
//   # comment            ; comment
//   [section]            one of run, device, drive, pulse, grid, optimizer, ensemble
//   key = value          value is a number, a word, or a list "a, b" / "[a, b]"
//
// Keys are unique across sections; a key under the wrong section header is
// an error, as is any unknown key. All physical quantities are plain
// numbers in units where gamma sets the rate scale.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qrect/types.hpp"

namespace qrect {

enum class Mode { Steady, SweepCw, SweepPhoton, OptimizeNoise, ValidateNoise };
enum class OutputFormat { Csv, Json };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : "'" + key + "': " + message),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  Mode mode = Mode::Steady;

  // [device]
  double gamma = 1.0;
  std::vector<double> delta{0.0, 0.0};
  std::optional<double> kl;
  std::vector<double> phases;

  // [drive]
  double amplitude = 0.22360679774997896;  // sqrt(0.05)
  double noise = 0.0;

  // [pulse]
  double bandwidth = 2.0;
  double delay = 0.0;
  double t_max = 40.0;
  double rtol = 1e-8;
  bool inverted = true;
  std::string timeseries_out;

  // [grid]
  double delta_min = -3.0, delta_max = 3.0;
  std::size_t delta_points = 61;
  double kl_min = 0.05, kl_max = kTwoPi - 0.05;
  std::size_t kl_points = 61;

  // [optimizer]
  std::vector<double> noise_ratios{0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
  std::size_t coarse_points = 61;
  std::size_t starts = 5;
  double tolerance = 1e-4;
  std::size_t max_iterations = 500;

  // [ensemble]
  std::size_t trajectories = 10000;
  double dt = 1e-3;
  double t_final = 20.0;
  double snapshot_time = 5.0;

  // [run]
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string out;
  OutputFormat format = OutputFormat::Csv;

  /// Device described by the [device] keys (phases from `kl` for two emitters).
  EmitterArray device() const;

  /// Throws ConfigError naming the offending key.
  void validate() const;

  /// Every key with its resolved value, grouped by section, for metadata.
  std::map<std::string, std::map<std::string, std::string>> resolved() const;
};

/// All recognised keys, in documentation order.
const std::vector<std::pair<std::string, std::string>>& config_keys();  // (section, key)

/// Applies `key = value` lines from `text` onto `config`. `source` labels errors.
void apply_config_text(RunConfig& config, const std::string& text, const std::string& source = "config");
void apply_config_file(RunConfig& config, const std::string& path);

/// Sets a single key from its textual value.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Loads `path` (if non-empty), then applies `overrides` in order, then validates.
RunConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides,
                       std::optional<Mode> mode = std::nullopt);

}  // namespace qrect
