#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "apt/accelerators.hpp"
#include "apt/adaptation.hpp"
#include "apt/annealing.hpp"
#include "apt/engine.hpp"
#include "apt/explorers.hpp"
#include "apt/targets.hpp"

namespace apt {

struct RunConfig {
  std::string preset;

  // [target]
  TargetSpec target;
  // [path]
  PathKind path_kind = PathKind::linear;
  std::size_t pairs = 10;
  /// Explicit comma-separated schedule; overrides `pairs` when set.
  std::string schedule;
  /// File whose last non-empty line is a schedule.
  std::string schedule_file;
  // [accelerator]
  AcceleratorKind accelerator = AcceleratorKind::identity;
  std::size_t steps = 0;
  std::vector<double> sigma{1.0};
  std::string flow_file;
  bool verify_work = false;
  // [explorer]
  HmcSettings hmc;
  // [run]
  std::size_t iterations = 10000;
  std::uint64_t seed = 0;
  std::optional<std::size_t> burn_in;
  std::size_t thin = 10;
  std::size_t workers = 1;
  bool keep_records = true;
  std::size_t tuning_rounds = 0;
  std::size_t pilot_iterations = 600;
  std::size_t pilot_burn_in = 100;
  std::string output = "out";
  // [free_energy]
  std::size_t resamples = 30;
  std::size_t per_pair = 1000;
  std::optional<double> reference_log_z;
  // [fit]
  FitSettings fit;
  std::size_t fit_iterations = 5000;
  // [sweep]
  std::vector<std::size_t> sweep_dims{2, 10, 50, 100};
  std::vector<std::size_t> sweep_steps{0, 1, 2, 5};

  /// Cross-field checks. Throws ConfigError naming the constraint.
  void validate() const;
};

/// Names of the built-in presets.
std::vector<std::string> preset_names();
/// Applies a preset on top of `cfg`. Throws ConfigError for an unknown name.
void apply_preset(RunConfig& cfg, const std::string& name);

/// Parses sectioned key = value text. A `preset` key in [run] is applied
/// before the remaining keys. Keys override `base`. Throws ConfigError with the line or field.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig parse_config(const std::filesystem::path& file, RunConfig base = {});

/// Every field, defaults included, in the same format parse_config reads.
std::string to_ini(const RunConfig& cfg);

/// The runnable pieces of a configuration.
struct Problem {
  AnnealingPath path;
  Schedule schedule;
  Accelerator accelerator;
  EngineConfig engine;
};

Problem build_problem(const RunConfig& cfg);

}  // namespace apt
