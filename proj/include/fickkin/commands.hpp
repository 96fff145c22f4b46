#pragma once

#include <string>
#include <vector>

#include "fickkin/config.hpp"
#include "fickkin/report.hpp"

namespace fickkin {

inline const std::vector<std::string>& command_verbs() {
  static const std::vector<std::string> v = {"constants", "operator", "fick-matrix", "verify",
                                             "solve",     "kinetic",  "study"};
  return v;
}

struct CommandResult {
  int exit_code = 0;
  std::string stage;    // failing stage, empty on success
  std::string message;  // error text
  Json report;          // main report (also written to <out>/<verb>.json)
};

/// Runs one verb, writes its artifacts under cfg.out_dir and an exit report
/// <out>/exit.json. Never throws for model errors; they map to exit codes
/// 2 (configuration/domain), 3 (structural), 4 (numerical).
CommandResult run_command(const std::string& verb, const RunConfig& cfg);

}  // namespace fickkin
