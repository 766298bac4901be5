#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "qrect/config.hpp"

using namespace qrect;

namespace {

RunConfig from_text(const std::string& text) {
  RunConfig c;
  apply_config_text(c, text);
  c.validate();
  return c;
}

std::string error_of(const std::string& text) {
  try {
    from_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal steady configuration fills defaults") {
  const RunConfig c = from_text(
      "mode = steady\n"
      "delta = [0, 0]\n"
      "kl = 1.0\n"
      "amplitude = 0.2236\n");
  CHECK(c.mode == Mode::Steady);
  CHECK(c.kl == 1.0);
  CHECK(c.amplitude == 0.2236);
  CHECK(c.gamma == 1.0);
  CHECK(c.delta_points == 61);
  CHECK(c.format == OutputFormat::Csv);
  const EmitterArray arr = c.device();
  CHECK(arr.phases == std::vector<double>{0.0, 1.0});
}

TEST_CASE("sections, comments and list syntax") {
  const RunConfig c = from_text(
      "# full-line comment\n"
      "; another\n"
      "[device]\n"
      "gamma = 2\n"
      "delta = 0.5, -0.5, 1\n"
      "phases = [0, 1, 2.5]\n"
      "\n"
      "[optimizer]\n"
      "noise_ratios = [0, 1]\n"
      "[run]\n"
      "format = json\n"
      "seed = 18446744073709551615\n");
  CHECK(c.gamma == 2.0);
  CHECK(c.delta == std::vector<double>{0.5, -0.5, 1.0});
  CHECK(c.device().phases == std::vector<double>{0.0, 1.0, 2.5});
  CHECK(c.noise_ratios == std::vector<double>{0.0, 1.0});
  CHECK(c.format == OutputFormat::Json);
  CHECK(c.seed == 18446744073709551615ull);
}

TEST_CASE("degenerate placement is refused") {
  const std::string e = error_of("kl = 0\n");
  CHECK(e.find("'kl'") != std::string::npos);
  CHECK(e.find("phases must be distinct") != std::string::npos);
}

TEST_CASE("errors name the offending key and constraint") {
  const std::string g = error_of("gamma = -1\nkl = 1\n");
  CHECK(g.find("'gamma'") != std::string::npos);
  CHECK(g.find("positive") != std::string::npos);

  CHECK(error_of("gama = 1\n").find("'gama': config:1: unknown key") != std::string::npos);
  CHECK(error_of("[drive]\ngamma = 1\n").find("section [device]") != std::string::npos);
  CHECK(error_of("[nowhere]\n").find("unknown section") != std::string::npos);
  CHECK(error_of("kl\n").find("expected 'key = value'") != std::string::npos);
  CHECK(error_of("format = xml\n").find("'format'") != std::string::npos);
  CHECK(error_of("inverted = maybe\n").find("'inverted'") != std::string::npos);
  CHECK(error_of("dt = 0.5\n").find("'dt'") != std::string::npos);
  CHECK(error_of("kl_max = 7\n").find("'kl_max'") != std::string::npos);
  CHECK(error_of("trajectories = -5\n").find("'trajectories'") != std::string::npos);
  CHECK(error_of("delta = [0, 0, 0]\n").find("'phases'") != std::string::npos);
  CHECK(error_of("kl = 1\nphases = 0, 1\n").find("'kl'") != std::string::npos);
  CHECK(error_of("mode = fly\n").find("unknown mode") != std::string::npos);
}

TEST_CASE("dimensional values are refused rather than converted") {
  CHECK(error_of("gamma = 1 GHz\n").find("dimensional") != std::string::npos);
  CHECK(error_of("amplitude = 0.2gamma\n").find("'amplitude'") != std::string::npos);
  CHECK(error_of("kl = inf\n").find("'kl'") != std::string::npos);
}

TEST_CASE("overrides apply after the file, in order") {
  const std::string path = "qrect_config_test.ini";
  {
    std::ofstream f(path);
    f << "[device]\nkl = 1.5\ndelta = 0.3, 0\n[run]\nseed = 4\n";
  }
  const RunConfig c = parse_config(path, {{"seed", "9"}, {"kl", "2"}, {"kl", "2.5"}}, Mode::SweepCw);
  CHECK(c.seed == 9);
  CHECK(c.kl == 2.5);
  CHECK(c.delta == std::vector<double>{0.3, 0.0});
  CHECK(c.mode == Mode::SweepCw);
  std::remove(path.c_str());

  CHECK_THROWS_AS(parse_config("does/not/exist.ini", {}), ConfigError);
  CHECK_THROWS_AS(parse_config("", {{"bogus", "1"}}), ConfigError);
}

TEST_CASE("resolved values reproduce the configuration") {
  RunConfig c = from_text("kl = 0.7\ndelta = 0.1, -0.2\nnoise = 0.3\nformat = json\nworkers = 3\n");
  const auto resolved = c.resolved();
  CHECK(resolved.at("device").at("kl") == "0.7");
  CHECK(resolved.at("run").at("workers") == "3");

  RunConfig rebuilt;
  for (const auto& [section, keys] : resolved) {
    for (const auto& [key, value] : keys) {
      if (key == "phases" && value == "[]") continue;
      if (value.empty()) continue;
      set_config_value(rebuilt, key, value);
    }
  }
  CHECK(rebuilt.resolved() == resolved);
}

TEST_CASE("every key is reachable and unique") {
  const auto& keys = config_keys();
  CHECK(keys.size() > 25);
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = i + 1; j < keys.size(); ++j) CHECK(keys[i].second != keys[j].second);
}

TEST_CASE("mode names round-trip") {
  for (Mode m : {Mode::Steady, Mode::SweepCw, Mode::SweepPhoton, Mode::OptimizeNoise,
                 Mode::ValidateNoise}) {
    CHECK(parse_mode(to_string(m)) == m);
  }
}
