#include "apt/free_energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "apt/random.hpp"

namespace apt {

WorkLog WorkLog::from_records(std::span<const SwapRecord> records, std::size_t pairs,
                              std::size_t burn_in) {
  WorkLog log(pairs);
  for (const auto& r : records) {
    if (r.iteration <= burn_in) continue;
    log.add(r.pair, {r.iteration, r.work_forward, r.work_backward});
  }
  return log;
}

void WorkLog::add(std::size_t pair, WorkEntry entry) {
  if (pair < 1 || pair > pairs_.size()) throw std::out_of_range("pair index out of range");
  if (pair % 2 != entry.iteration % 2)
    throw std::invalid_argument("entry at iteration " + std::to_string(entry.iteration) +
                                " violates the parity of pair " + std::to_string(pair));
  pairs_[pair - 1].push_back(entry);
}

double log_mean_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s / static_cast<double>(v.size()));
}

namespace {

void pair_terms(const std::vector<WorkEntry>& entries, std::size_t n, double& fwd, double& bwd) {
  if (entries.empty())
    throw std::invalid_argument("pair " + std::to_string(n) + " has no work entries");
  std::vector<double> a(entries.size()), b(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    a[i] = -entries[i].forward;
    b[i] = entries[i].backward;
  }
  fwd = -log_mean_exp(a);
  bwd = log_mean_exp(b);
}

FreeEnergyEstimate estimate_from(const std::vector<const std::vector<WorkEntry>*>& pairs) {
  FreeEnergyEstimate e;
  for (std::size_t n = 1; n <= pairs.size(); ++n) {
    double f = 0, b = 0;
    pair_terms(*pairs[n - 1], n, f, b);
    e.pair_forward.push_back(f);
    e.pair_backward.push_back(b);
    e.forward += f;
    e.backward += b;
  }
  e.averaged = 0.5 * (e.forward + e.backward);
  e.log_z = -e.averaged;
  return e;
}

}  // namespace

double forward_estimate(const WorkLog& log) { return averaged_estimate(log).forward; }

double backward_estimate(const WorkLog& log) { return averaged_estimate(log).backward; }

FreeEnergyEstimate averaged_estimate(const WorkLog& log) {
  std::vector<const std::vector<WorkEntry>*> pairs;
  for (std::size_t n = 1; n <= log.pairs(); ++n) pairs.push_back(&log.pair(n));
  return estimate_from(pairs);
}

std::vector<FreeEnergyEstimate> subsample_estimates(const WorkLog& log, std::size_t resamples,
                                                    std::size_t per_pair, std::uint64_t seed) {
  std::vector<FreeEnergyEstimate> out;
  out.reserve(resamples);
  std::vector<std::vector<WorkEntry>> subsets(log.pairs());
  for (std::size_t r = 0; r < resamples; ++r) {
    std::vector<const std::vector<WorkEntry>*> ptrs;
    for (std::size_t n = 1; n <= log.pairs(); ++n) {
      const auto& all = log.pair(n);
      auto& sub = subsets[n - 1];
      Stream rng(seed, streams::kSubsample + n, r);
      sub.clear();
      std::sample(all.begin(), all.end(), std::back_inserter(sub), per_pair, rng);
      ptrs.push_back(&sub);
    }
    out.push_back(estimate_from(ptrs));
  }
  return out;
}

}  // namespace apt
