#include "apt/io.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace apt {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_write(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  File f(std::fopen(file.string().c_str(), "w"));
  if (!f) throw std::runtime_error("cannot write '" + file.string() + "'");
  return f;
}

// JSON has no representation for non-finite values; they become null.
nlohmann::json real(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_samples_csv(const std::filesystem::path& file, const SampleStore& samples) {
  File f = open_write(file);
  std::fputs("iteration,chain", f.get());
  for (std::size_t i = 0; i < samples.dim; ++i) std::fprintf(f.get(), ",x%zu", i);
  std::fputc('\n', f.get());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (std::size_t n = 0; n < samples.chains; ++n) {
      std::fprintf(f.get(), "%zu,%zu", samples.iterations[s], n);
      for (double v : samples.at(s, n)) std::fprintf(f.get(), ",%.17g", v);
      std::fputc('\n', f.get());
    }
  }
}

void write_swaps_csv(const std::filesystem::path& file, const std::vector<SwapRecord>& records) {
  File f = open_write(file);
  std::fputs("iteration,pair,W_fwd,W_bwd,alpha,accepted,nonfinite\n", f.get());
  for (const auto& r : records)
    std::fprintf(f.get(), "%zu,%zu,%.17g,%.17g,%.17g,%d,%d\n", r.iteration, r.pair,
                 r.work_forward, r.work_backward, r.alpha, r.accepted ? 1 : 0,
                 r.nonfinite ? 1 : 0);
}

std::vector<SwapRecord> read_swaps_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read '" + file.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("iteration,pair,W_fwd,W_bwd,alpha,accepted", 0) != 0)
    throw std::runtime_error("unexpected swap CSV header in '" + file.string() + "'");
  std::vector<SwapRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    SwapRecord r;
    int acc = 0, nonfinite = 0;
    char wf[64], wb[64], al[64];
    const int got = std::sscanf(line.c_str(), "%zu,%zu,%63[^,],%63[^,],%63[^,],%d,%d", &r.iteration,
                                &r.pair, wf, wb, al, &acc, &nonfinite);
    if (got < 6) throw std::runtime_error("malformed swap CSV line " + std::to_string(lineno));
    r.work_forward = std::strtod(wf, nullptr);
    r.work_backward = std::strtod(wb, nullptr);
    r.alpha = std::strtod(al, nullptr);
    r.accepted = acc != 0;
    r.nonfinite = got == 7 && nonfinite != 0;
    out.push_back(r);
  }
  return out;
}

nlohmann::json to_json(const RunDiagnostics& d) {
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < d.rejections.size(); ++i) {
    const auto& r = d.rejections[i];
    const auto& s = d.skl[i];
    pairs.push_back({{"pair", i + 1},
                     {"rejection", real(r.rate)},
                     {"se", real(r.se)},
                     {"count", r.count},
                     {"missing", r.missing},
                     {"skl", real(s.value)},
                     {"skl_se", real(s.se)}});
  }
  return {{"pairs", pairs},
          {"barrier", real(d.barrier)},
          {"tau_formula", real(d.tau_formula.rate)},
          {"tau_formula_saturated", d.tau_formula.saturated},
          {"R", d.round_trips},
          {"tau_empirical", real(d.tau_empirical)},
          {"CN_R", real(d.cn_round_trips)},
          {"potential_evals_per_swap", d.cost.potential},
          {"network_evals_per_swap", d.cost.network},
          {"iterations", d.iterations},
          {"burn_in", d.burn_in},
          {"swaps_proposed", d.swaps_proposed},
          {"swaps_accepted", d.swaps_accepted},
          {"swaps_nonfinite", d.swaps_nonfinite}};
}

nlohmann::json to_json(const FreeEnergyEstimate& e) {
  nlohmann::json per_pair = nlohmann::json::array();
  for (std::size_t i = 0; i < e.pair_forward.size(); ++i)
    per_pair.push_back(
        {{"pair", i + 1}, {"forward", real(e.pair_forward[i])}, {"backward", real(e.pair_backward[i])}});
  return {{"delta_f_forward", real(e.forward)},
          {"delta_f_backward", real(e.backward)},
          {"delta_f_averaged", real(e.averaged)},
          {"log_z_averaged", real(e.log_z)},
          {"per_pair", per_pair}};
}

nlohmann::json round_trips_json(const RunResult& r) {
  return {{"R", r.index.round_trips()},
          {"per_machine", r.index.round_trips_per_machine()},
          {"completion_iterations", r.round_trip_iterations}};
}

nlohmann::json explorer_json(const ExplorerStats& s) {
  nlohmann::json chains = nlohmann::json::array();
  for (std::size_t n = 0; n < s.proposals.size(); ++n) {
    const double rate =
        s.proposals[n] ? static_cast<double>(s.accepted[n]) / static_cast<double>(s.proposals[n])
                       : 0.0;
    chains.push_back({{"chain", n},
                      {"proposals", s.proposals[n]},
                      {"accepted", s.accepted[n]},
                      {"nonfinite", s.nonfinite[n]},
                      {"acceptance_rate", rate}});
  }
  return chains;
}

void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
  write_text(file, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read '" + file.string() + "'");
  return nlohmann::json::parse(in);
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  File f = open_write(file);
  std::fputs(text.c_str(), f.get());
}

}  // namespace apt
