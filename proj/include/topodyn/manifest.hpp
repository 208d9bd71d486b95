#pragma once

// Run manifests. A manifest is itself a valid config file: the key=value
// lines are the fully resolved inputs of the run, and everything that must
// not affect a replay (timings, warnings, version) rides in '#' comments.
// Feeding the manifest back through --config reproduces the output bytes.

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace topodyn {

inline constexpr const char* kVersion = "1.0.0";

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> resolved;     // replayable key=value lines
  std::vector<std::string> outputs;                // files written by the run
  std::vector<std::string> warnings;               // clamps, undefined rows, stalls
  double wall_seconds = 0.0;

  void note(const std::string& w) { warnings.push_back(w); }

  void write(std::ostream& os) const {
    os << "# topodyn " << kVersion << " run manifest\n";
    os << "# command: " << command << '\n';
    os << "# wall_seconds: " << wall_seconds << '\n';
    for (const auto& f : outputs) os << "# output: " << f << '\n';
    for (const auto& w : warnings) os << "# warning: " << w << '\n';
    os << "# replay: topodyn " << command << " --config <this file>\n";
    for (const auto& [k, v] : resolved) os << k << " = " << v << '\n';
  }
};

}  // namespace topodyn
