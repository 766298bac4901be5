#include "qrect/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "qrect/io.hpp"

namespace qrect {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Steady: return "steady";
    case Mode::SweepCw: return "sweep-cw";
    case Mode::SweepPhoton: return "sweep-photon";
    case Mode::OptimizeNoise: return "optimize-noise";
    case Mode::ValidateNoise: return "validate-noise";
  }
  return "steady";
}

Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::Steady, Mode::SweepCw, Mode::SweepPhoton, Mode::OptimizeNoise,
                 Mode::ValidateNoise}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("mode", "unknown mode '" + s +
                                "' (expected steady, sweep-cw, sweep-photon, optimize-noise, "
                                "validate-noise)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc() || ptr != last) {
    throw ConfigError(key, "expected a plain number in units of gamma, got '" + t +
                               "' (dimensional inputs are not converted)");
  }
  if (!std::isfinite(v)) throw ConfigError(key, "value must be finite");
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + t + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + t + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') throw ConfigError(key, "unterminated list");
    t = t.substr(1, t.size() - 2);
  }
  std::vector<double> out;
  if (trim(t).empty()) return out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s + "]";
}

struct KeySpec {
  const char* section;
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
KeySpec number_key(const char* section, const char* key, T RunConfig::*member) {
  return {section, key,
          [=](RunConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) {
              c.*member = parse_number(key, v);
            } else {
              const auto u = parse_unsigned(key, v);
              if (u > std::numeric_limits<T>::max()) throw ConfigError(key, "value out of range");
              c.*member = static_cast<T>(u);
            }
          },
          [=](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

KeySpec list_key(const char* section, const char* key, std::vector<double> RunConfig::*member) {
  return {section, key,
          [=](RunConfig& c, const std::string& v) { c.*member = parse_list(key, v); },
          [=](const RunConfig& c) { return format_list(c.*member); }};
}

KeySpec string_key(const char* section, const char* key, std::string RunConfig::*member) {
  return {section, key, [=](RunConfig& c, const std::string& v) { c.*member = trim(v); },
          [=](const RunConfig& c) { return c.*member; }};
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"run", "mode", [](RunConfig& c, const std::string& v) { c.mode = parse_mode(trim(v)); },
       [](const RunConfig& c) { return to_string(c.mode); }},
      number_key("run", "seed", &RunConfig::seed),
      number_key("run", "workers", &RunConfig::workers),
      string_key("run", "out", &RunConfig::out),
      {"run", "format",
       [](RunConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "csv") c.format = OutputFormat::Csv;
         else if (t == "json") c.format = OutputFormat::Json;
         else throw ConfigError("format", "expected csv or json, got '" + t + "'");
       },
       [](const RunConfig& c) { return std::string(c.format == OutputFormat::Csv ? "csv" : "json"); }},

      number_key("device", "gamma", &RunConfig::gamma),
      list_key("device", "delta", &RunConfig::delta),
      {"device", "kl", [](RunConfig& c, const std::string& v) { c.kl = parse_number("kl", v); },
       [](const RunConfig& c) { return c.kl ? format_double(*c.kl) : std::string(); }},
      list_key("device", "phases", &RunConfig::phases),

      number_key("drive", "amplitude", &RunConfig::amplitude),
      number_key("drive", "noise", &RunConfig::noise),

      number_key("pulse", "bandwidth", &RunConfig::bandwidth),
      number_key("pulse", "delay", &RunConfig::delay),
      number_key("pulse", "t_max", &RunConfig::t_max),
      number_key("pulse", "rtol", &RunConfig::rtol),
      {"pulse", "inverted",
       [](RunConfig& c, const std::string& v) { c.inverted = parse_bool("inverted", v); },
       [](const RunConfig& c) { return std::string(c.inverted ? "true" : "false"); }},
      string_key("pulse", "timeseries_out", &RunConfig::timeseries_out),

      number_key("grid", "delta_min", &RunConfig::delta_min),
      number_key("grid", "delta_max", &RunConfig::delta_max),
      number_key("grid", "delta_points", &RunConfig::delta_points),
      number_key("grid", "kl_min", &RunConfig::kl_min),
      number_key("grid", "kl_max", &RunConfig::kl_max),
      number_key("grid", "kl_points", &RunConfig::kl_points),

      list_key("optimizer", "noise_ratios", &RunConfig::noise_ratios),
      number_key("optimizer", "coarse_points", &RunConfig::coarse_points),
      number_key("optimizer", "starts", &RunConfig::starts),
      number_key("optimizer", "tolerance", &RunConfig::tolerance),
      number_key("optimizer", "max_iterations", &RunConfig::max_iterations),

      number_key("ensemble", "trajectories", &RunConfig::trajectories),
      number_key("ensemble", "dt", &RunConfig::dt),
      number_key("ensemble", "t_final", &RunConfig::t_final),
      number_key("ensemble", "snapshot_time", &RunConfig::snapshot_time),
  };
  return table;
}

const KeySpec* find_key(const std::string& key) {
  for (const auto& k : key_table()) {
    if (key == k.key) return &k;
  }
  return nullptr;
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const auto keys = [] {
    std::vector<std::pair<std::string, std::string>> v;
    for (const auto& k : key_table()) v.emplace_back(k.section, k.key);
    return v;
  }();
  return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError(key, "unknown key");
  spec->set(config, value);
}

void apply_config_text(RunConfig& config, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("", where + ": malformed section header '" + t + "'");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      static const char* known[] = {"run", "device", "drive", "pulse", "grid", "optimizer", "ensemble"};
      if (std::none_of(std::begin(known), std::end(known), [&](const char* s) { return section == s; })) {
        throw ConfigError("", where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("", where + ": expected 'key = value', got '" + t + "'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    const KeySpec* spec = find_key(key);
    if (!spec) throw ConfigError(key, where + ": unknown key");
    if (!section.empty() && section != spec->section) {
      throw ConfigError(key, where + ": key belongs to section [" + std::string(spec->section) +
                                 "], not [" + section + "]");
    }
    spec->set(config, value);
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(config, buf.str(), path);
}

EmitterArray RunConfig::device() const {
  EmitterArray arr;
  arr.gamma = gamma;
  arr.detunings = delta;
  if (!phases.empty()) {
    arr.phases = phases;
  } else if (kl) {
    arr.phases = {0.0, *kl};
  } else if (delta.size() == 1) {
    arr.phases = {0.0};
  } else {
    arr.phases = {0.0, 1.0};
  }
  return arr;
}

void RunConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("gamma", "gamma must be positive (got " + format_double(gamma) + ")");
  if (delta.empty()) throw ConfigError("delta", "at least one detuning is required");
  if (kl && !phases.empty()) throw ConfigError("kl", "give either kl or phases, not both");
  if (kl && delta.size() != 2) throw ConfigError("kl", "kl describes exactly two emitters");
  if (!phases.empty() && phases.size() != delta.size()) {
    throw ConfigError("phases", "phases and delta must have the same length");
  }
  if (!kl && phases.empty() && delta.size() > 2) {
    throw ConfigError("phases", "phases are required for more than two emitters");
  }
  try {
    device().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(phases.empty() ? "kl" : "phases", e.what());
  }

  if (!(amplitude >= 0.0)) throw ConfigError("amplitude", "amplitude must be non-negative");
  if (!(noise >= 0.0)) throw ConfigError("noise", "noise intensity must be non-negative");

  if (!(bandwidth > 0.0)) throw ConfigError("bandwidth", "bandwidth must be positive");
  if (!(delay >= 0.0)) throw ConfigError("delay", "delay must be non-negative");
  if (!(t_max > 0.0)) throw ConfigError("t_max", "t_max must be positive");
  if (!(rtol > 0.0 && rtol < 1e-2)) throw ConfigError("rtol", "rtol must lie in (0, 1e-2)");

  if (!(delta_max >= delta_min)) throw ConfigError("delta_max", "delta_max must be >= delta_min");
  if (delta_points == 0) throw ConfigError("delta_points", "delta_points must be positive");
  if (!(kl_min > 0.0)) throw ConfigError("kl_min", "kl_min must be > 0 (colocated emitters)");
  if (!(kl_max < kTwoPi)) throw ConfigError("kl_max", "kl_max must be < 2 pi");
  if (!(kl_max >= kl_min)) throw ConfigError("kl_max", "kl_max must be >= kl_min");
  if (kl_points == 0) throw ConfigError("kl_points", "kl_points must be positive");

  if (noise_ratios.empty()) throw ConfigError("noise_ratios", "at least one ratio is required");
  for (double r : noise_ratios) {
    if (!(r >= 0.0)) throw ConfigError("noise_ratios", "ratios must be non-negative");
  }
  if (coarse_points < 2) throw ConfigError("coarse_points", "coarse_points must be at least 2");
  if (starts == 0) throw ConfigError("starts", "starts must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance", "tolerance must be positive");
  if (max_iterations == 0) throw ConfigError("max_iterations", "max_iterations must be positive");

  if (trajectories == 0) throw ConfigError("trajectories", "trajectories must be positive");
  if (!(dt > 0.0) || dt > 0.01 / gamma) throw ConfigError("dt", "dt must lie in (0, 0.01/gamma]");
  if (!(t_final > 0.0) || t_final / dt < 4) throw ConfigError("t_final", "t_final must span at least 4 steps");
  if (!(snapshot_time >= 0.0 && snapshot_time <= t_final)) {
    throw ConfigError("snapshot_time", "snapshot_time must lie in [0, t_final]");
  }
}

std::map<std::string, std::map<std::string, std::string>> RunConfig::resolved() const {
  std::map<std::string, std::map<std::string, std::string>> out;
  for (const auto& k : key_table()) {
    const std::string v = k.get(*this);
    if (std::string(k.key) == "kl" && !kl) continue;
    out[k.section][k.key] = v;
  }
  return out;
}

RunConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides,
                       std::optional<Mode> mode) {
  RunConfig cfg;
  if (!path.empty()) apply_config_file(cfg, path);
  if (mode) cfg.mode = *mode;
  for (const auto& [key, value] : overrides) set_config_value(cfg, key, value);
  cfg.validate();
  return cfg;
}

}  // namespace qrect
