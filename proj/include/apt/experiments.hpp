#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "apt/config.hpp"

namespace apt {

inline constexpr const char* kVersion = "1.0.0";

/// Tunes the schedule of `problem` in place when cfg.tuning_rounds > 0 and
/// returns every tuning state (empty when no tuning was requested).
std::vector<TunerState> tune_problem(Problem& problem, const RunConfig& cfg);

/// Each command writes into cfg.output and returns a process exit status.
int cmd_run(const RunConfig& cfg);
int cmd_tune(const RunConfig& cfg);
int cmd_fit_flows(const RunConfig& cfg);
int cmd_free_energy(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

struct VerifyReport {
  std::vector<std::string> mismatches;
  std::size_t checked = 0;
  bool ok() const { return mismatches.empty(); }
};

/// Recomputes diagnostics (and free energy, when present) of an output
/// directory from its swap CSV and compares them with the emitted JSON.
VerifyReport verify_outputs(const std::filesystem::path& dir);
int cmd_verify(const std::filesystem::path& dir);

/// Writes error.json into `dir` describing the exception.
void write_error(const std::filesystem::path& dir, const std::exception& e);

}  // namespace apt
