#include "apt/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "apt/errors.hpp"
#include "apt/io.hpp"

namespace apt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

json metadata(const RunConfig& cfg, const std::string& command, const Problem& p,
              double wall_seconds) {
  const EvalCounts tc = p.path.target().counts();
  const EvalCounts rc = p.path.reference().counts();
  return {{"command", command},
          {"version", kVersion},
          {"seed", cfg.seed},
          {"config", to_ini(cfg)},
          {"wall_time_seconds", wall_seconds},
          {"evaluations",
           {{"target_potential", tc.potential},
            {"target_gradient", tc.gradient},
            {"reference_potential", rc.potential},
            {"reference_gradient", rc.gradient}}}};
}

json run_summary(const RunResult& r, const Problem& p) {
  json j = to_json(r.diagnostics);
  j["N"] = p.schedule.pairs();
  j["schedule"] = p.schedule.serialize();
  j["accelerator"] = std::string(to_string(p.accelerator.kind));
  j["K"] = p.accelerator.steps;
  j["explorer"] = explorer_json(r.explorer);
  return j;
}

void write_schedules(const fs::path& dir, const std::vector<TunerState>& states) {
  std::string text;
  json rounds = json::array();
  for (const auto& s : states) {
    text += s.schedule.serialize() + "\n";
    rounds.push_back({{"round", s.round},
                      {"schedule", s.schedule.serialize()},
                      {"pilot_rejections", s.rejections},
                      {"pilot_barrier", global_barrier(s.rejections)}});
  }
  write_text(dir / "schedules.txt", text);
  write_json(dir / "tuning.json", rounds);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

json free_energy_report(const std::vector<SwapRecord>& records, const Problem& p,
                        const RunConfig& cfg, std::size_t burn_in,
                        std::vector<FreeEnergyEstimate>* subsamples) {
  const WorkLog log = WorkLog::from_records(records, p.schedule.pairs(), burn_in);
  json j = to_json(averaged_estimate(log));
  j["burn_in"] = burn_in;
  if (auto lz = p.path.target().log_normalizer()) j["analytic_log_z"] = *lz;
  if (cfg.reference_log_z) j["reference_log_z"] = *cfg.reference_log_z;
  if (subsamples) {
    *subsamples = subsample_estimates(log, cfg.resamples, cfg.per_pair, cfg.seed);
    std::vector<double> lz;
    for (const auto& e : *subsamples) lz.push_back(e.log_z);
    j["subsample_resamples"] = cfg.resamples;
    j["subsample_per_pair"] = cfg.per_pair;
    j["subsample_median_log_z"] = median(lz);
  }
  return j;
}

}  // namespace

std::vector<TunerState> tune_problem(Problem& problem, const RunConfig& cfg) {
  if (cfg.tuning_rounds == 0) return {};
  TuningSettings ts;
  ts.rounds = cfg.tuning_rounds;
  ts.pilot_iterations = cfg.pilot_iterations;
  ts.pilot_burn_in = cfg.pilot_burn_in;
  ts.seed = cfg.seed;
  ts.workers = cfg.workers;
  auto states = run_tuning(problem.path, problem.schedule, problem.accelerator, problem.engine.hmc, ts);
  problem.schedule = states.back().schedule;
  return states;
}

int cmd_run(const RunConfig& cfg) {
  const auto start = Clock::now();
  const fs::path dir = cfg.output;
  Problem p = build_problem(cfg);
  const auto states = tune_problem(p, cfg);
  if (!states.empty()) write_schedules(dir, states);

  const RunResult r = run(p.path, p.schedule, p.accelerator, p.engine);
  if (cfg.thin > 0) write_samples_csv(dir / "samples.csv", r.samples);
  if (cfg.keep_records) {
    write_swaps_csv(dir / "swaps.csv", r.records);
    bool every_pair = true;
    for (const auto& s : r.pair_statistics) every_pair = every_pair && s.count > 0;
    if (every_pair)
      write_json(dir / "free_energy.json",
                 free_energy_report(r.records, p, cfg, p.engine.effective_burn_in(), nullptr));
  }
  write_json(dir / "round_trips.json", round_trips_json(r));
  write_json(dir / "diagnostics.json", run_summary(r, p));
  write_json(dir / "metadata.json", metadata(cfg, "run", p, seconds_since(start)));
  std::printf("R = %llu, CN-R = %.4g, barrier = %.4g, tau_formula = %.4g\n",
              static_cast<unsigned long long>(r.diagnostics.round_trips),
              r.diagnostics.cn_round_trips, r.diagnostics.barrier, r.diagnostics.tau_formula.rate);
  return 0;
}

int cmd_tune(const RunConfig& cfg) {
  const auto start = Clock::now();
  RunConfig c = cfg;
  if (c.tuning_rounds == 0) c.tuning_rounds = 10;
  Problem p = build_problem(c);
  const auto states = tune_problem(p, c);
  write_schedules(c.output, states);
  write_json(fs::path(c.output) / "metadata.json", metadata(c, "tune", p, seconds_since(start)));
  std::printf("wrote %zu schedules\n", states.size());
  return 0;
}

int cmd_fit_flows(const RunConfig& cfg) {
  const auto start = Clock::now();
  const fs::path dir = cfg.output;
  RunConfig c = cfg;
  c.accelerator = AcceleratorKind::identity;
  c.steps = 0;
  c.flow_file.clear();
  Problem p = build_problem(c);
  const auto states = tune_problem(p, c);
  if (!states.empty()) write_schedules(dir, states);

  EngineConfig eng = p.engine;
  eng.iterations = c.fit_iterations;
  eng.keep_records = false;
  eng.thin = std::max<std::size_t>(c.thin, 1);
  const RunResult r = run(p.path, p.schedule, p.accelerator, eng);
  std::vector<std::vector<Point>> samples;
  for (std::size_t n = 0; n < p.schedule.chains(); ++n)
    samples.push_back(chain_samples(r.samples, n));

  FitSettings fs_ = c.fit;
  fs_.seed = c.seed;
  fs_.workers = c.workers;
  const FitResult fit = fit_affine_flows(samples, p.path, p.schedule, fs_);
  write_text(dir / "flows.txt", fit.params.serialize());
  write_text(dir / "schedule.txt", p.schedule.serialize() + "\n");
  std::string trace = "pair,step,loss\n";
  for (std::size_t j = 0; j < fit.loss_trace.size(); ++j)
    for (std::size_t s = 0; s < fit.loss_trace[j].size(); ++s)
      trace += std::to_string(j + 1) + "," + std::to_string(s) + "," +
               format_real(fit.loss_trace[j][s]) + "\n";
  write_text(dir / "fit_trace.csv", trace);
  write_json(dir / "metadata.json", metadata(c, "fit-flows", p, seconds_since(start)));
  std::printf("fitted %zu flows\n", fit.params.maps.size());
  return 0;
}

int cmd_free_energy(const RunConfig& cfg) {
  const auto start = Clock::now();
  const fs::path dir = cfg.output;
  RunConfig c = cfg;
  c.keep_records = true;
  Problem p = build_problem(c);
  const auto states = tune_problem(p, c);
  if (!states.empty()) write_schedules(dir, states);

  const RunResult r = run(p.path, p.schedule, p.accelerator, p.engine);
  write_swaps_csv(dir / "swaps.csv", r.records);
  std::vector<FreeEnergyEstimate> subs;
  json fe = free_energy_report(r.records, p, c, p.engine.effective_burn_in(), &subs);
  write_json(dir / "free_energy.json", fe);

  std::string csv = "resample,delta_f_forward,delta_f_backward,delta_f_averaged,log_z\n";
  for (std::size_t i = 0; i < subs.size(); ++i)
    csv += std::to_string(i) + "," + format_real(subs[i].forward) + "," +
           format_real(subs[i].backward) + "," + format_real(subs[i].averaged) + "," +
           format_real(subs[i].log_z) + "\n";
  write_text(dir / "free_energy_subsamples.csv", csv);
  write_json(dir / "round_trips.json", round_trips_json(r));
  write_json(dir / "diagnostics.json", run_summary(r, p));
  write_json(dir / "metadata.json", metadata(c, "free-energy", p, seconds_since(start)));
  std::printf("log Z = %.6f (median of %zu subsamples %.6f)\n", fe["log_z_averaged"].get<double>(),
              subs.size(), fe["subsample_median_log_z"].get<double>());
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  const auto start = Clock::now();
  const fs::path dir = cfg.output;
  std::string csv = "d,K,R,tau_empirical,tau_formula,barrier,CN_R\n";
  std::optional<Problem> last;
  for (std::size_t d : cfg.sweep_dims) {
    for (std::size_t K : cfg.sweep_steps) {
      RunConfig c = cfg;
      c.target.dim = d;
      c.steps = K;
      c.keep_records = false;
      c.thin = 0;
      Problem p = build_problem(c);
      tune_problem(p, c);
      const RunResult r = run(p.path, p.schedule, p.accelerator, p.engine);
      const auto& g = r.diagnostics;
      csv += std::to_string(d) + "," + std::to_string(K) + "," + std::to_string(g.round_trips) +
             "," + format_real(g.tau_empirical) + "," + format_real(g.tau_formula.rate) + "," +
             format_real(g.barrier) + "," + format_real(g.cn_round_trips) + "\n";
      std::printf("d=%zu K=%zu R=%llu\n", d, K, static_cast<unsigned long long>(g.round_trips));
      last.emplace(std::move(p));
    }
  }
  write_text(dir / "sweep.csv", csv);
  if (last) write_json(dir / "metadata.json", metadata(cfg, "sweep", *last, seconds_since(start)));
  return 0;
}

VerifyReport verify_outputs(const fs::path& dir) {
  VerifyReport rep;
  const json diag = read_json(dir / "diagnostics.json");
  const auto records = read_swaps_csv(dir / "swaps.csv");
  const std::size_t N = diag.at("N").get<std::size_t>();
  const std::size_t burn_in = diag.at("burn_in").get<std::size_t>();
  const std::size_t T = diag.at("iterations").get<std::size_t>();

  auto check = [&](const std::string& what, double expected, const json& emitted) {
    ++rep.checked;
    if (emitted.is_null()) {
      if (std::isfinite(expected)) rep.mismatches.push_back(what + ": emitted null");
      return;
    }
    const double got = emitted.get<double>();
    if (std::abs(got - expected) > 1e-12 * (1.0 + std::abs(expected)))
      rep.mismatches.push_back(what + ": emitted " + format_real(got) + ", recomputed " +
                               format_real(expected));
  };

  const auto stats = pair_stats(records, N, burn_in);
  const RunDiagnostics d =
      summarize(stats, 0, T, burn_in, parse_accelerator_kind(diag.at("accelerator").get<std::string>()),
                diag.at("K").get<std::size_t>());
  for (std::size_t i = 0; i < N; ++i) {
    const json& pj = diag.at("pairs").at(i);
    check("pair " + std::to_string(i + 1) + " rejection", d.rejections[i].rate, pj.at("rejection"));
    check("pair " + std::to_string(i + 1) + " se", d.rejections[i].se, pj.at("se"));
    check("pair " + std::to_string(i + 1) + " skl", d.skl[i].value, pj.at("skl"));
  }
  check("barrier", d.barrier, diag.at("barrier"));
  check("tau_formula", d.tau_formula.rate, diag.at("tau_formula"));
  check("swaps_proposed", static_cast<double>(d.swaps_proposed), diag.at("swaps_proposed"));
  check("swaps_accepted", static_cast<double>(d.swaps_accepted), diag.at("swaps_accepted"));

  // replay the index process from the accepted flags
  IndexProcess idx(N);
  std::vector<std::uint8_t> accepted(N + 1, 0);
  std::size_t k = 0;
  for (std::size_t t = 1; t <= T; ++t) {
    std::fill(accepted.begin(), accepted.end(), 0);
    while (k < records.size() && records[k].iteration == t) {
      accepted[records[k].pair] = records[k].accepted ? 1 : 0;
      ++k;
    }
    idx.update(t, accepted);
  }
  const double R = static_cast<double>(idx.round_trips());
  check("R", R, diag.at("R"));
  check("CN_R", R / static_cast<double>(d.cost.potential), diag.at("CN_R"));
  check("tau_empirical", T ? R / static_cast<double>(T) : 0.0, diag.at("tau_empirical"));

  if (fs::exists(dir / "free_energy.json")) {
    const json fe = read_json(dir / "free_energy.json");
    const std::size_t fe_burn = fe.at("burn_in").get<std::size_t>();
    const FreeEnergyEstimate e = averaged_estimate(WorkLog::from_records(records, N, fe_burn));
    check("delta_f_forward", e.forward, fe.at("delta_f_forward"));
    check("delta_f_backward", e.backward, fe.at("delta_f_backward"));
    check("delta_f_averaged", e.averaged, fe.at("delta_f_averaged"));
  }
  return rep;
}

int cmd_verify(const fs::path& dir) {
  const VerifyReport rep = verify_outputs(dir);
  for (const auto& m : rep.mismatches) std::printf("MISMATCH %s\n", m.c_str());
  std::printf("%zu values checked, %zu mismatches\n", rep.checked, rep.mismatches.size());
  return rep.ok() ? 0 : 3;
}

void write_error(const fs::path& dir, const std::exception& e) {
  json j = {{"error", "runtime"}, {"message", e.what()}};
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    j["error"] = "config";
    j["field"] = ce->field();
  } else if (dynamic_cast<const FitError*>(&e)) {
    j["error"] = "fit";
  }
  try {
    write_json(dir / "error.json", j);
  } catch (...) {
    // the output directory itself may be the problem
  }
}

}  // namespace apt
