#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "apt/errors.hpp"
#include "apt/experiments.hpp"

namespace {

struct Flags {
  std::string config;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t workers = 0;
};

apt::RunConfig load(const Flags& f) {
  apt::RunConfig cfg;
  if (!f.preset.empty()) apt::apply_preset(cfg, f.preset);
  if (!f.config.empty()) cfg = apt::parse_config(f.config, cfg);
  if (!f.out.empty()) cfg.output = f.out;
  if (f.seed_set) cfg.seed = f.seed;
  if (f.workers) cfg.workers = f.workers;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-reversible parallel tempering with path accelerators"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Configuration file");
    sub->add_option("--preset", flags.preset, "Built-in experiment preset");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--seed", flags.seed, "Random seed")->each([&](const std::string&) {
      flags.seed_set = true;
    });
    sub->add_option("--workers", flags.workers, "Worker threads");
  };

  auto* run = app.add_subcommand("run", "Run the sampler and write diagnostics");
  auto* tune = app.add_subcommand("tune", "Tune the annealing schedule");
  auto* fit = app.add_subcommand("fit-flows", "Fit affine flows from PT samples");
  auto* fe = app.add_subcommand("free-energy", "Estimate the free energy with subsample boxes");
  auto* sweep = app.add_subcommand("sweep", "Round trips over dimensions and step counts");
  for (auto* s : {run, tune, fit, fe, sweep}) add_common(s);
  auto* verify = app.add_subcommand("verify", "Recompute diagnostics from raw records");
  std::string verify_dir;
  verify->add_option("dir", verify_dir, "Output directory of a previous run")->required();
  app.add_subcommand("presets", "List built-in presets");

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  if (sub == "presets") {
    for (const auto& name : apt::preset_names()) std::printf("%s\n", name.c_str());
    return 0;
  }
  if (sub == "verify") {
    try {
      return apt::cmd_verify(verify_dir);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }

  std::string out_dir = flags.out.empty() ? "out" : flags.out;
  try {
    const apt::RunConfig cfg = load(flags);
    out_dir = cfg.output;
    if (sub == "run") return apt::cmd_run(cfg);
    if (sub == "tune") return apt::cmd_tune(cfg);
    if (sub == "fit-flows") return apt::cmd_fit_flows(cfg);
    if (sub == "free-energy") return apt::cmd_free_energy(cfg);
    if (sub == "sweep") return apt::cmd_sweep(cfg);
  } catch (const apt::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    apt::write_error(out_dir, e);
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    apt::write_error(out_dir, e);
    return 1;
  }
  return 1;
}
