#pragma once

/// Command-line front end: loads system definitions from JSON (files or the
/// bundled fixtures), runs the classification and verification pipelines, and
/// emits text or JSON reports. Reports name the mathematical rule applied at
/// each step so a verdict can be audited without rerunning.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ck::cli {

struct RunConfig {
  std::string command;
  std::string input;  // file path or "fixture:NAME"
  double box_halfwidth = 0.5;
  int samples = 256;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
  std::string format = "text";
};

/// Dispatches one command given argv-style arguments (program name excluded).
/// Exit codes: 0 ok, 1 check failed, 2 bad input, 3 degenerate input.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Bundled fixture names, in listing order.
std::vector<std::string> fixture_names();

/// JSON text of a bundled fixture. Throws std::out_of_range for unknown names.
const std::string& fixture_text(const std::string& name);

}  // namespace ck::cli
