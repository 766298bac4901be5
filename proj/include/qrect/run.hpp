#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "qrect/config.hpp"

namespace qrect {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;

/// Version string recorded in every metadata sidecar.
std::string tool_version();

/// Executes `config`. The primary artifact goes to `config.out` (or `stdout`
/// when no path is given); each file artifact gets a `<path>.meta.json`
/// sidecar. Failures are reported on `stderr` as a single JSON object and
/// mapped to the exit codes above.
int run(const RunConfig& config, std::ostream& stdout_stream, std::ostream& stderr_stream);

/// Machine-readable error report.
nlohmann::json error_json(const std::string& kind, const std::string& message,
                          const std::string& key = {});

/// Summary document written by validate-noise.
nlohmann::json validate_noise_report(const RunConfig& config);

}  // namespace qrect
