#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "apt/config.hpp"
#include "apt/errors.hpp"
#include "apt/experiments.hpp"
#include "apt/io.hpp"

using namespace apt;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(
[target]
name = gaussian
dim = 1

[path]
N = 1

[run]
iterations = 10
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("apt_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& file) {
  std::ifstream in(file);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

std::string field_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "none";
}

RunConfig small_run(const fs::path& out) {
  RunConfig cfg = parse_config_text(R"(
[target]
name = gmm
dim = 2
[path]
N = 4
[explorer]
step_size = 0.03
[run]
iterations = 800
thin = 4
seed = 3
)");
  cfg.output = out.string();
  return cfg;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(APT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("minimal config fills defaults") {
  const RunConfig cfg = parse_config_text(kMinimal);
  CHECK(cfg.target.name == "gaussian");
  CHECK(cfg.pairs == 1);
  CHECK(cfg.iterations == 10);
  CHECK(cfg.accelerator == AcceleratorKind::identity);
  CHECK(cfg.hmc.step_size == 0.03);
  CHECK(cfg.hmc.leapfrog_steps == 5);
  CHECK(cfg.thin == 10);
  const Problem p = build_problem(cfg);
  CHECK(p.schedule == uniform_schedule(1));
  CHECK(p.engine.iterations == 10);
}

TEST_CASE("invalid combinations name the offending field") {
  CHECK(field_of(std::string(kMinimal) + "[accelerator]\nkind = identity\nK = 3\n") ==
        "accelerator.K");
  CHECK(field_of(std::string(kMinimal) + "[accelerator]\nkind = langevin_bridge\nK = 0\n") ==
        "accelerator.K");
  CHECK(field_of(std::string(kMinimal) + "[accelerator]\nkind = analytic_diffusion\nK = 1\n") ==
        "accelerator.kind");
  CHECK(field_of(std::string(kMinimal) + "[explorer]\nstep_size = 0\n") == "explorer.step_size");
  CHECK(field_of(std::string(kMinimal) + "[explorer]\ncolour = blue\n") == "explorer.colour");
  CHECK(field_of("[run\niterations = 3\n").rfind("line", 0) == 0);
  CHECK(field_of("[run]\npreset = nonexistent\n") == "run.preset");
}

TEST_CASE("table preset expands to the published settings") {
  RunConfig cfg;
  apply_preset(cfg, "table1-pt-gmm10-n30");
  CHECK(cfg.target.name == "gmm");
  CHECK(cfg.target.dim == 10);
  CHECK(cfg.pairs == 30);
  CHECK(cfg.hmc.step_size == 0.03);
  CHECK(cfg.hmc.leapfrog_steps == 5);
  CHECK(cfg.iterations == 100000);
  CHECK(cfg.tuning_rounds == 10);
  CHECK(cfg.accelerator == AcceleratorKind::identity);
  for (const auto& name : preset_names()) {
    RunConfig c;
    CHECK_NOTHROW(apply_preset(c, name));
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("config files override presets") {
  const RunConfig cfg = parse_config_text("[run]\npreset = table1-pt-gmm10-n30\niterations = 50\n");
  CHECK(cfg.iterations == 50);
  CHECK(cfg.pairs == 30);
}

TEST_CASE("every field survives a text round trip") {
  RunConfig cfg;
  apply_preset(cfg, "fig3-mw32-pt");
  cfg.seed = 12345;
  cfg.burn_in = 77;
  cfg.sigma = {0.5};
  const std::string once = to_ini(cfg);
  const std::string twice = to_ini(parse_config_text(once));
  CHECK(once == twice);
}

TEST_CASE("tuning writes the initial schedule and one per round") {
  const fs::path dir = scratch("tune");
  RunConfig cfg = small_run(dir);
  cfg.tuning_rounds = 10;
  cfg.pilot_iterations = 200;
  cfg.pilot_burn_in = 20;
  REQUIRE(cmd_tune(cfg) == 0);
  const auto sched = lines(dir / "schedules.txt");
  CHECK(sched.size() == 11);
  for (const auto& l : sched) CHECK_NOTHROW(Schedule::parse(l));
  CHECK(read_json(dir / "tuning.json").size() == 11);
}

TEST_CASE("run outputs verify against their raw records") {
  const fs::path dir = scratch("run");
  REQUIRE(cmd_run(small_run(dir)) == 0);
  for (const char* f : {"samples.csv", "swaps.csv", "diagnostics.json", "round_trips.json",
                        "metadata.json", "free_energy.json"})
    CHECK(fs::exists(dir / f));
  const VerifyReport rep = verify_outputs(dir);
  CHECK(rep.ok());
  CHECK(rep.checked > 10);

  const auto meta = read_json(dir / "metadata.json");
  CHECK(meta.contains("config"));
  CHECK(meta.contains("wall_time_seconds"));

  // tampering is caught
  auto diag = read_json(dir / "diagnostics.json");
  diag["barrier"] = diag["barrier"].get<double>() + 1e-6;
  write_json(dir / "diagnostics.json", diag);
  CHECK_FALSE(verify_outputs(dir).ok());
}

TEST_CASE("identical configs give identical diagnostics") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(cmd_run(small_run(a)) == 0);
  REQUIRE(cmd_run(small_run(b)) == 0);
  CHECK(slurp(a / "diagnostics.json") == slurp(b / "diagnostics.json"));
  CHECK(slurp(a / "swaps.csv") == slurp(b / "swaps.csv"));
}

TEST_CASE("swap csv round trips exactly") {
  std::vector<SwapRecord> recs(3);
  recs[0] = {1, 1, 0.1234567890123456789, -3.5e-17, 0.25, true, false, 2, 0};
  recs[1] = {2, 2, 1e300, -1e-300, 1.0, true, false, 2, 0};
  recs[2] = {3, 1, std::nan(""), 0.0, 0.0, false, true, 2, 0};
  const fs::path dir = scratch("csv");
  write_swaps_csv(dir / "s.csv", recs);
  const auto back = read_swaps_csv(dir / "s.csv");
  REQUIRE(back.size() == 3);
  CHECK(back[0].work_forward == recs[0].work_forward);
  CHECK(back[0].work_backward == recs[0].work_backward);
  CHECK(back[1].work_forward == recs[1].work_forward);
  CHECK(back[1].work_backward == recs[1].work_backward);
  CHECK(std::isnan(back[2].work_forward));
  CHECK(back[2].nonfinite);
}

TEST_CASE("free-energy command writes the box-plot table") {
  const fs::path dir = scratch("fe");
  RunConfig cfg = small_run(dir);
  cfg.resamples = 30;
  cfg.per_pair = 100;
  REQUIRE(cmd_free_energy(cfg) == 0);
  CHECK(lines(dir / "free_energy_subsamples.csv").size() == 31);
  const auto fe = read_json(dir / "free_energy.json");
  CHECK(fe.contains("log_z_averaged"));
}

TEST_CASE("sweep writes one row per dimension and step count") {
  const fs::path dir = scratch("sweep");
  RunConfig cfg;
  apply_preset(cfg, "fig2-diff-gmm");
  cfg.output = dir.string();
  cfg.iterations = 200;
  cfg.pairs = 4;
  cfg.sweep_dims = {2, 3};
  cfg.sweep_steps = {0, 1};
  REQUIRE(cmd_sweep(cfg) == 0);
  const auto rows = lines(dir / "sweep.csv");
  CHECK(rows.size() == 5);
  CHECK(rows[0].rfind("d,K,R", 0) == 0);
}

TEST_CASE("fit-flows writes a loadable flow file") {
  const fs::path dir = scratch("fit");
  RunConfig cfg = small_run(dir);
  cfg.fit_iterations = 4000;
  cfg.thin = 1;
  cfg.fit.steps = 50;
  cfg.fit.batch = 128;
  REQUIRE(cmd_fit_flows(cfg) == 0);
  const AffineFlowParams p = AffineFlowParams::parse(slurp(dir / "flows.txt"));
  CHECK(p.maps.size() == 4);

  RunConfig again = small_run(scratch("fit_run"));
  again.accelerator = AcceleratorKind::affine_flow;
  again.steps = 1;
  again.flow_file = (dir / "flows.txt").string();
  CHECK(cmd_run(again) == 0);
}

TEST_CASE("the binary reports configuration errors") {
  const fs::path dir = scratch("bin");
  std::ofstream(dir / "bad.ini") << kMinimal << "[accelerator]\nkind = identity\nK = 3\n";
  CHECK(run_binary("run --config " + (dir / "bad.ini").string() + " --out " + dir.string()) == 2);
  const auto err = read_json(dir / "error.json");
  CHECK(err["error"] == "config");
  CHECK(err["field"] == "accelerator.K");

  std::ofstream(dir / "good.ini") << kMinimal;
  const fs::path out = dir / "good";
  CHECK(run_binary("run --config " + (dir / "good.ini").string() + " --out " + out.string()) == 0);
  CHECK(run_binary("verify " + out.string()) == 0);
  CHECK(run_binary("presets") == 0);
  CHECK(run_binary("bogus") != 0);
}
