// qrect: steady-state, sweep, optimization and noise-validation runs for
// two-level emitter arrays coupled to a waveguide.
//
// Every configuration key is also a flag of the same name, e.g.
//   qrect sweep-cw --config run.ini --amplitude 0.3 --kl_points 31 --out d.csv
// Flags are applied after the config file, in command-line order.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qrect/config.hpp"
#include "qrect/run.hpp"

namespace {

struct Subcommand {
  qrect::Mode mode;
  const char* description;
};

const Subcommand kSubcommands[] = {
    {qrect::Mode::Steady, "steady-state fluxes and diode metrics for one device"},
    {qrect::Mode::SweepCw, "cw diode efficiency over a (delta, kL) grid"},
    {qrect::Mode::SweepPhoton, "single-photon diode metrics over a (delta, kL) grid"},
    {qrect::Mode::OptimizeNoise, "optimal efficiency versus noise-to-drive ratio"},
    {qrect::Mode::ValidateNoise, "trajectory ensemble against the averaged master equation"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum optical diode simulations for emitter arrays in a waveguide"};
  app.set_version_flag("--version", qrect::tool_version());
  app.require_subcommand(1);

  std::string config_path;
  // One slot per key; only flags that were actually given become overrides.
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::map<CLI::App*, qrect::Mode> modes;

  for (const auto& sc : kSubcommands) {
    CLI::App* sub = app.add_subcommand(qrect::to_string(sc.mode), sc.description);
    modes[sub] = sc.mode;
    sub->add_option("--config", config_path, "configuration file (key = value with [sections])");
    for (const auto& [section, key] : qrect::config_keys()) {
      if (key == "mode") continue;
      std::string names = "--" + key;
      const std::string dashed = [&] {
        std::string s = key;
        for (auto& ch : s) ch = ch == '_' ? '-' : ch;
        return s;
      }();
      if (dashed != key) names += ",--" + dashed;
      auto* opt = sub->add_option(names, values[key], "[" + section + "] " + key);
      opt->allow_extra_args(false);
      options[sub->get_name() + "/" + key] = opt;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << qrect::error_json("usage_error", e.what()).dump() << "\n";
    return qrect::kExitConfigError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const qrect::Mode mode = modes.at(chosen);

  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& [section, key] : qrect::config_keys()) {
    if (key == "mode") continue;
    const auto it = options.find(chosen->get_name() + "/" + key);
    if (it != options.end() && it->second->count() > 0) overrides.emplace_back(key, values[key]);
  }

  qrect::RunConfig config;
  try {
    config = qrect::parse_config(config_path, overrides, mode);
  } catch (const qrect::ConfigError& e) {
    std::cerr << qrect::error_json("config_error", e.what(), e.key()).dump() << "\n";
    return qrect::kExitConfigError;
  }
  return qrect::run(config, std::cout, std::cerr);
}
