#include "apt/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "apt/errors.hpp"

namespace apt {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& field, const std::string& raw) {
  const std::string text = trim(raw);
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(field, "cannot parse '" + text + "'");
  return v;
}

bool parse_bool(const std::string& field, const std::string& raw) {
  const std::string t = trim(raw);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(field, "expected true or false, got '" + t + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& field, const std::string& raw) {
  std::vector<T> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(field, item));
  if (out.empty()) throw ConfigError(field, "empty list");
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

using Setter = void (*)(RunConfig&, const std::string& field, const std::string& value);

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      // [run]
      {"run.iterations", [](RunConfig& c, const std::string& f, const std::string& v) { c.iterations = parse_number<std::size_t>(f, v); }},
      {"run.seed", [](RunConfig& c, const std::string& f, const std::string& v) { c.seed = parse_number<std::uint64_t>(f, v); }},
      {"run.burn_in", [](RunConfig& c, const std::string& f, const std::string& v) { c.burn_in = parse_number<std::size_t>(f, v); }},
      {"run.thin", [](RunConfig& c, const std::string& f, const std::string& v) { c.thin = parse_number<std::size_t>(f, v); }},
      {"run.workers", [](RunConfig& c, const std::string& f, const std::string& v) { c.workers = parse_number<std::size_t>(f, v); }},
      {"run.keep_records", [](RunConfig& c, const std::string& f, const std::string& v) { c.keep_records = parse_bool(f, v); }},
      {"run.tuning_rounds", [](RunConfig& c, const std::string& f, const std::string& v) { c.tuning_rounds = parse_number<std::size_t>(f, v); }},
      {"run.pilot_iterations", [](RunConfig& c, const std::string& f, const std::string& v) { c.pilot_iterations = parse_number<std::size_t>(f, v); }},
      {"run.pilot_burn_in", [](RunConfig& c, const std::string& f, const std::string& v) { c.pilot_burn_in = parse_number<std::size_t>(f, v); }},
      {"run.output", [](RunConfig& c, const std::string&, const std::string& v) { c.output = trim(v); }},
      // [target]
      {"target.name", [](RunConfig& c, const std::string&, const std::string& v) { c.target.name = trim(v); }},
      {"target.dim", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.dim = parse_number<std::size_t>(f, v); }},
      {"target.seed", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.seed = parse_number<std::uint64_t>(f, v); }},
      {"target.mean", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.mean = parse_list<double>(f, v); }},
      {"target.stddev", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.stddev = parse_list<double>(f, v); }},
      {"target.offset", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.offset = parse_number<double>(f, v); }},
      {"target.components", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.components = parse_number<std::size_t>(f, v); }},
      {"target.loc_range", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.loc_range = parse_number<double>(f, v); }},
      {"target.component_std", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.component_std = parse_number<double>(f, v); }},
      {"target.scale", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.scale = parse_number<double>(f, v); }},
      {"target.particles", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.particles = parse_number<std::size_t>(f, v); }},
      {"target.spatial_dim", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.spatial_dim = parse_number<std::size_t>(f, v); }},
      {"target.a", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.double_well.a = parse_number<double>(f, v); }},
      {"target.b", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.double_well.b = parse_number<double>(f, v); }},
      {"target.c", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.double_well.c = parse_number<double>(f, v); }},
      {"target.tau", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.double_well.tau = parse_number<double>(f, v); }},
      {"target.d0", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.double_well.d0 = parse_number<double>(f, v); }},
      {"target.remove_com", [](RunConfig& c, const std::string& f, const std::string& v) { c.target.remove_com = parse_bool(f, v); }},
      // [path]
      {"path.kind", [](RunConfig& c, const std::string&, const std::string& v) { c.path_kind = parse_path_kind(trim(v)); }},
      {"path.N", [](RunConfig& c, const std::string& f, const std::string& v) { c.pairs = parse_number<std::size_t>(f, v); }},
      {"path.schedule", [](RunConfig& c, const std::string&, const std::string& v) { c.schedule = trim(v); }},
      {"path.schedule_file", [](RunConfig& c, const std::string&, const std::string& v) { c.schedule_file = trim(v); }},
      // [accelerator]
      {"accelerator.kind", [](RunConfig& c, const std::string&, const std::string& v) { c.accelerator = parse_accelerator_kind(trim(v)); }},
      {"accelerator.K", [](RunConfig& c, const std::string& f, const std::string& v) { c.steps = parse_number<std::size_t>(f, v); }},
      {"accelerator.sigma", [](RunConfig& c, const std::string& f, const std::string& v) { c.sigma = parse_list<double>(f, v); }},
      {"accelerator.flow_file", [](RunConfig& c, const std::string&, const std::string& v) { c.flow_file = trim(v); }},
      {"accelerator.verify", [](RunConfig& c, const std::string& f, const std::string& v) { c.verify_work = parse_bool(f, v); }},
      // [explorer]
      {"explorer.step_size", [](RunConfig& c, const std::string& f, const std::string& v) { c.hmc.step_size = parse_number<double>(f, v); }},
      {"explorer.leapfrog_steps", [](RunConfig& c, const std::string& f, const std::string& v) { c.hmc.leapfrog_steps = parse_number<std::size_t>(f, v); }},
      {"explorer.steps_per_iteration", [](RunConfig& c, const std::string& f, const std::string& v) { c.hmc.steps_per_iteration = parse_number<std::size_t>(f, v); }},
      // [free_energy]
      {"free_energy.resamples", [](RunConfig& c, const std::string& f, const std::string& v) { c.resamples = parse_number<std::size_t>(f, v); }},
      {"free_energy.per_pair", [](RunConfig& c, const std::string& f, const std::string& v) { c.per_pair = parse_number<std::size_t>(f, v); }},
      {"free_energy.reference_log_z", [](RunConfig& c, const std::string& f, const std::string& v) { c.reference_log_z = parse_number<double>(f, v); }},
      // [fit]
      {"fit.learning_rate", [](RunConfig& c, const std::string& f, const std::string& v) { c.fit.learning_rate = parse_number<double>(f, v); }},
      {"fit.batch", [](RunConfig& c, const std::string& f, const std::string& v) { c.fit.batch = parse_number<std::size_t>(f, v); }},
      {"fit.steps", [](RunConfig& c, const std::string& f, const std::string& v) { c.fit.steps = parse_number<std::size_t>(f, v); }},
      {"fit.patience", [](RunConfig& c, const std::string& f, const std::string& v) { c.fit.patience = parse_number<std::size_t>(f, v); }},
      {"fit.max_log_scale", [](RunConfig& c, const std::string& f, const std::string& v) { c.fit.max_log_scale = parse_number<double>(f, v); }},
      {"fit.iterations", [](RunConfig& c, const std::string& f, const std::string& v) { c.fit_iterations = parse_number<std::size_t>(f, v); }},
      // [sweep]
      {"sweep.dims", [](RunConfig& c, const std::string& f, const std::string& v) { c.sweep_dims = parse_list<std::size_t>(f, v); }},
      {"sweep.K", [](RunConfig& c, const std::string& f, const std::string& v) { c.sweep_steps = parse_list<std::size_t>(f, v); }},
  };
  return table;
}

std::string read_file(const std::filesystem::path& file, const std::string& field) {
  std::ifstream in(file);
  if (!in) throw ConfigError(field, "cannot open '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"table1-pt-gmm10-n30", "fig2-diff-gmm", "fig3-mw32-pt", "fig3-dw4-pt60"};
}

void apply_preset(RunConfig& c, const std::string& name) {
  if (name == "table1-pt-gmm10-n30") {
    c.target = TargetSpec{};
    c.target.name = "gmm";
    c.target.dim = 10;
    c.path_kind = PathKind::linear;
    c.pairs = 30;
    c.accelerator = AcceleratorKind::identity;
    c.steps = 0;
    c.hmc = {0.03, 5, 1};
    c.iterations = 100000;
    c.tuning_rounds = 10;
  } else if (name == "fig2-diff-gmm") {
    c.target = TargetSpec{};
    c.target.name = "gmm";
    c.target.dim = 10;
    c.path_kind = PathKind::analytic_vp;
    c.pairs = 30;
    c.accelerator = AcceleratorKind::analytic_diffusion;
    c.steps = 1;
    c.hmc = {0.03, 5, 1};
    c.iterations = 100000;
    c.tuning_rounds = 10;
    c.sweep_dims = {2, 10, 50, 100};
    c.sweep_steps = {0, 1, 2, 5};
  } else if (name == "fig3-mw32-pt") {
    c.target = TargetSpec{};
    c.target.name = "manywell";
    c.target.dim = 32;
    c.path_kind = PathKind::linear;
    c.pairs = 30;
    c.accelerator = AcceleratorKind::identity;
    c.steps = 0;
    c.hmc = {0.22, 5, 1};
    c.iterations = 100000;
    c.thin = 1;
    c.tuning_rounds = 10;
    c.resamples = 30;
    c.per_pair = 1000;
    c.reference_log_z = 164.696;
  } else if (name == "fig3-dw4-pt60") {
    c.target = TargetSpec{};
    c.target.name = "dw4";
    c.target.dim = 8;
    c.path_kind = PathKind::linear;
    c.pairs = 60;
    c.accelerator = AcceleratorKind::identity;
    c.steps = 0;
    c.hmc = {0.22, 5, 1};
    c.iterations = 100000;
    c.thin = 1;
    c.tuning_rounds = 10;
    c.resamples = 30;
    c.per_pair = 1000;
    c.reference_log_z = 29.660;
  } else {
    throw ConfigError("run.preset", "unknown preset '" + name + "'");
  }
  c.preset = name;
}

void RunConfig::validate() const {
  if (schedule.empty() && schedule_file.empty() && pairs == 0)
    throw ConfigError("path.N", "must be at least 1");
  hmc.validate();
  switch (accelerator) {
    case AcceleratorKind::identity:
      if (steps != 0) throw ConfigError("accelerator.K", "identity requires K = 0");
      break;
    case AcceleratorKind::affine_flow:
      if (steps != 1) throw ConfigError("accelerator.K", "affine_flow requires K = 1");
      if (flow_file.empty()) throw ConfigError("accelerator.flow_file", "required for affine_flow");
      break;
    case AcceleratorKind::langevin_bridge:
      if (steps == 0) throw ConfigError("accelerator.K", "langevin_bridge requires K >= 1");
      for (double s : sigma)
        if (!(s > 0.0)) throw ConfigError("accelerator.sigma", "must be positive");
      break;
    case AcceleratorKind::analytic_diffusion:
      if (path_kind != PathKind::analytic_vp)
        throw ConfigError("accelerator.kind", "analytic_diffusion requires path.kind = analytic_vp");
      break;
  }
  if (path_kind == PathKind::analytic_vp && target.name != "gmm")
    throw ConfigError("path.kind", "analytic_vp requires a gmm target");
  if (burn_in && *burn_in > iterations)
    throw ConfigError("run.burn_in", "exceeds run.iterations");
  if (pilot_burn_in >= pilot_iterations && tuning_rounds > 0)
    throw ConfigError("run.pilot_burn_in", "must be below run.pilot_iterations");
  if (resamples == 0) throw ConfigError("free_energy.resamples", "must be positive");
  if (per_pair == 0) throw ConfigError("free_energy.per_pair", "must be positive");
  if (workers == 0) throw ConfigError("run.workers", "must be positive");
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }

  RunConfig cfg = std::move(base);
  if (auto preset = tree.get_optional<std::string>("run.preset"))
    apply_preset(cfg, trim(*preset));

  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(section, "keys must appear inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string field = section + "." + key;
      if (field == "run.preset") continue;
      auto it = table.find(field);
      if (it == table.end()) throw ConfigError(field, "unknown key");
      it->second(cfg, field, value.data());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& file, RunConfig base) {
  return parse_config_text(read_file(file, "config"), std::move(base));
}

std::string to_ini(const RunConfig& c) {
  std::ostringstream o;
  o << "[run]\n";
  if (!c.preset.empty()) o << "preset = " << c.preset << "\n";
  o << "iterations = " << c.iterations << "\nseed = " << c.seed << "\n";
  o << "burn_in = " << (c.burn_in ? *c.burn_in : c.iterations / 10) << "\n";
  o << "thin = " << c.thin << "\nworkers = " << c.workers << "\n";
  o << "keep_records = " << (c.keep_records ? "true" : "false") << "\n";
  o << "tuning_rounds = " << c.tuning_rounds << "\npilot_iterations = " << c.pilot_iterations
    << "\npilot_burn_in = " << c.pilot_burn_in << "\noutput = " << c.output << "\n\n";

  const auto& t = c.target;
  o << "[target]\nname = " << t.name << "\ndim = " << t.dim << "\nseed = " << t.seed << "\n";
  o << "mean = " << join(t.mean) << "\nstddev = " << join(t.stddev) << "\noffset = " << fmt(t.offset)
    << "\n";
  o << "components = " << t.components << "\nloc_range = " << fmt(t.loc_range)
    << "\ncomponent_std = " << fmt(t.component_std) << "\nscale = " << fmt(t.scale) << "\n";
  o << "particles = " << t.particles << "\nspatial_dim = " << t.spatial_dim << "\n";
  o << "a = " << fmt(t.double_well.a) << "\nb = " << fmt(t.double_well.b)
    << "\nc = " << fmt(t.double_well.c) << "\ntau = " << fmt(t.double_well.tau)
    << "\nd0 = " << fmt(t.double_well.d0) << "\n";
  o << "remove_com = " << (t.remove_com ? "true" : "false") << "\n\n";

  o << "[path]\nkind = " << to_string(c.path_kind) << "\nN = " << c.pairs << "\n";
  if (!c.schedule.empty()) o << "schedule = " << c.schedule << "\n";
  if (!c.schedule_file.empty()) o << "schedule_file = " << c.schedule_file << "\n";
  o << "\n[accelerator]\nkind = " << to_string(c.accelerator) << "\nK = " << c.steps
    << "\nsigma = " << join(c.sigma) << "\n";
  if (!c.flow_file.empty()) o << "flow_file = " << c.flow_file << "\n";
  o << "verify = " << (c.verify_work ? "true" : "false") << "\n\n";

  o << "[explorer]\nstep_size = " << fmt(c.hmc.step_size)
    << "\nleapfrog_steps = " << c.hmc.leapfrog_steps
    << "\nsteps_per_iteration = " << c.hmc.steps_per_iteration << "\n\n";

  o << "[free_energy]\nresamples = " << c.resamples << "\nper_pair = " << c.per_pair << "\n";
  if (c.reference_log_z) o << "reference_log_z = " << fmt(*c.reference_log_z) << "\n";
  o << "\n[fit]\nlearning_rate = " << fmt(c.fit.learning_rate) << "\nbatch = " << c.fit.batch
    << "\nsteps = " << c.fit.steps << "\npatience = " << c.fit.patience
    << "\nmax_log_scale = " << fmt(c.fit.max_log_scale) << "\niterations = " << c.fit_iterations
    << "\n\n";
  o << "[sweep]\ndims = " << join(c.sweep_dims) << "\nK = " << join(c.sweep_steps) << "\n";
  return o.str();
}

Problem build_problem(const RunConfig& cfg) {
  cfg.validate();
  TargetDensity target = build_target(cfg.target);
  AnnealingPath path = cfg.path_kind == PathKind::analytic_vp
                           ? AnnealingPath::analytic_vp(target)
                           : AnnealingPath::linear(standard_reference(target), target);

  std::optional<Schedule> schedule;
  try {
    if (!cfg.schedule.empty()) {
      schedule = Schedule::parse(cfg.schedule);
    } else if (!cfg.schedule_file.empty()) {
      std::istringstream in(read_file(cfg.schedule_file, "path.schedule_file"));
      std::string line, last;
      while (std::getline(in, line))
        if (!trim(line).empty()) last = trim(line);
      schedule = Schedule::parse(last);
    } else {
      schedule = uniform_schedule(cfg.pairs);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("path.schedule", e.what());
  }

  Accelerator acc;
  acc.kind = cfg.accelerator;
  acc.steps = cfg.steps;
  acc.langevin.sigma = cfg.sigma;
  acc.verify_work = cfg.verify_work;
  if (!cfg.flow_file.empty())
    acc.flow = AffineFlowParams::parse(read_file(cfg.flow_file, "accelerator.flow_file"));
  acc.validate(path, *schedule);

  EngineConfig eng;
  eng.iterations = cfg.iterations;
  eng.seed = cfg.seed;
  eng.burn_in = cfg.burn_in;
  eng.thin = cfg.thin;
  eng.hmc = cfg.hmc;
  eng.workers = cfg.workers;
  eng.keep_records = cfg.keep_records;
  return Problem{std::move(path), std::move(*schedule), std::move(acc), eng};
}

}  // namespace apt
