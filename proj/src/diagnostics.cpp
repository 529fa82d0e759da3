#include "apt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "apt/index_process.hpp"
#include "apt/random.hpp"

namespace apt {

void PairStats::add(const SwapRecord& r) {
  ++count;
  if (r.accepted) ++accepted;
  sum_alpha += r.alpha;
  sum_alpha_sq += r.alpha * r.alpha;
  if (r.nonfinite || !std::isfinite(r.work_forward) || !std::isfinite(r.work_backward)) {
    ++nonfinite;
    return;
  }
  ++work_count;
  sum_wf += r.work_forward;
  sum_wf_sq += r.work_forward * r.work_forward;
  sum_wb += r.work_backward;
  sum_wb_sq += r.work_backward * r.work_backward;
}

void PairStats::merge(const PairStats& o) {
  count += o.count;
  accepted += o.accepted;
  nonfinite += o.nonfinite;
  sum_alpha += o.sum_alpha;
  sum_alpha_sq += o.sum_alpha_sq;
  work_count += o.work_count;
  sum_wf += o.sum_wf;
  sum_wf_sq += o.sum_wf_sq;
  sum_wb += o.sum_wb;
  sum_wb_sq += o.sum_wb_sq;
}

std::vector<PairStats> pair_stats(std::span<const SwapRecord> records, std::size_t pairs,
                                  std::size_t burn_in) {
  std::vector<PairStats> stats(pairs);
  for (const auto& r : records) {
    if (r.iteration <= burn_in) continue;
    if (r.pair < 1 || r.pair > pairs) throw std::out_of_range("record pair out of range");
    stats[r.pair - 1].add(r);
  }
  return stats;
}

namespace {

// standard error of the mean from running sums
double mean_se(double sum, double sum_sq, std::size_t n) {
  if (n < 2) return 0.0;
  const double m = sum / static_cast<double>(n);
  const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) /
                                       static_cast<double>(n - 1));
  return std::sqrt(var / static_cast<double>(n));
}

}  // namespace

std::vector<RejectionEstimate> estimate_rejections(std::span<const PairStats> stats) {
  std::vector<RejectionEstimate> out(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    if (s.count == 0) continue;
    out[i].missing = false;
    out[i].count = s.count;
    out[i].rate = std::clamp(1.0 - s.sum_alpha / static_cast<double>(s.count), 0.0, 1.0);
    out[i].se = mean_se(s.sum_alpha, s.sum_alpha_sq, s.count);
  }
  return out;
}

std::vector<RejectionEstimate> estimate_rejections(std::span<const SwapRecord> records,
                                                   std::size_t pairs, std::size_t burn_in) {
  const auto stats = pair_stats(records, pairs, burn_in);
  return estimate_rejections(stats);
}

double global_barrier(std::span<const double> rejections) {
  double s = 0.0;
  for (double r : rejections) s += r;
  return s;
}

double global_barrier(std::span<const RejectionEstimate> rejections) {
  double s = 0.0;
  for (const auto& r : rejections) s += r.rate;
  return s;
}

RoundTripRate round_trip_rate_formula(std::span<const double> rejections) {
  double s = 0.0;
  for (double r : rejections) {
    if (r >= 1.0) return {0.0, true};
    s += r / (1.0 - r);
  }
  return {1.0 / (2.0 + 2.0 * s), false};
}

SklEstimate skl_estimate(std::span<const double> wf, std::span<const double> wb,
                         std::optional<double> delta_f) {
  SklEstimate e;
  if (wf.empty() || wb.empty()) return e;
  double sf = 0, sf2 = 0, sb = 0, sb2 = 0;
  for (double v : wf) sf += v, sf2 += v * v;
  for (double v : wb) sb += v, sb2 += v * v;
  const double mf = sf / static_cast<double>(wf.size());
  const double mb = sb / static_cast<double>(wb.size());
  e.value = 0.5 * (mf - mb);
  const double sef = mean_se(sf, sf2, wf.size()), seb = mean_se(sb, sb2, wb.size());
  e.se = 0.5 * std::sqrt(sef * sef + seb * seb);
  if (delta_f) {
    e.kl_forward = mf - *delta_f;
    e.kl_backward = *delta_f - mb;
  }
  return e;
}

SklEstimate skl_estimate(const PairStats& s, std::optional<double> delta_f) {
  SklEstimate e;
  if (s.work_count == 0) return e;
  const double n = static_cast<double>(s.work_count);
  const double mf = s.sum_wf / n, mb = s.sum_wb / n;
  e.value = 0.5 * (mf - mb);
  const double sef = mean_se(s.sum_wf, s.sum_wf_sq, s.work_count);
  const double seb = mean_se(s.sum_wb, s.sum_wb_sq, s.work_count);
  e.se = 0.5 * std::sqrt(sef * sef + seb * seb);
  if (delta_f) {
    e.kl_forward = mf - *delta_f;
    e.kl_backward = *delta_f - mb;
  }
  return e;
}

double compute_normalized(std::uint64_t round_trips, AcceleratorKind kind, std::size_t steps,
                          bool modeled) {
  const AccelCost c = accel_cost(kind, steps, modeled);
  return static_cast<double>(round_trips) / static_cast<double>(c.potential);
}

std::uint64_t simulate_round_trips(std::span<const double> rejections, std::size_t iterations,
                                   std::uint64_t seed) {
  const std::size_t N = rejections.size();
  IndexProcess idx(N);
  std::vector<std::uint8_t> accepted(N + 1, 0);
  Stream rng(seed, streams::kSynthetic);
  for (std::size_t t = 1; t <= iterations; ++t) {
    for (std::size_t n = 1; n <= N; ++n)
      accepted[n] = (n % 2 == t % 2) && rng.uniform() >= rejections[n - 1];
    idx.update(t, accepted);
  }
  return idx.round_trips();
}

RunDiagnostics summarize(std::span<const PairStats> stats, std::uint64_t round_trips,
                         std::size_t iterations, std::size_t burn_in, AcceleratorKind kind,
                         std::size_t steps, bool modeled) {
  RunDiagnostics d;
  d.rejections = estimate_rejections(stats);
  d.skl.reserve(stats.size());
  std::vector<double> rates;
  rates.reserve(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    d.skl.push_back(skl_estimate(stats[i]));
    rates.push_back(d.rejections[i].rate);
    d.swaps_proposed += stats[i].count;
    d.swaps_accepted += stats[i].accepted;
    d.swaps_nonfinite += stats[i].nonfinite;
  }
  d.barrier = global_barrier(rates);
  d.tau_formula = round_trip_rate_formula(rates);
  d.round_trips = round_trips;
  d.iterations = iterations;
  d.burn_in = burn_in;
  d.tau_empirical =
      iterations ? static_cast<double>(round_trips) / static_cast<double>(iterations) : 0.0;
  d.cost = accel_cost(kind, steps, modeled);
  d.cn_round_trips = static_cast<double>(round_trips) / static_cast<double>(d.cost.potential);
  return d;
}

}  // namespace apt
