#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "apt/accelerators.hpp"
#include "apt/records.hpp"

namespace apt {

/// Running sums for one pair's swap records.
struct PairStats {
  std::size_t count = 0;
  std::size_t accepted = 0;
  std::size_t nonfinite = 0;
  double sum_alpha = 0.0, sum_alpha_sq = 0.0;
  /// Work sums skip non-finite values.
  std::size_t work_count = 0;
  double sum_wf = 0.0, sum_wf_sq = 0.0;
  double sum_wb = 0.0, sum_wb_sq = 0.0;

  void add(const SwapRecord& r);
  void merge(const PairStats& other);
};

/// Per-pair statistics (index n - 1 for pair n) from records with iteration > burn_in.
std::vector<PairStats> pair_stats(std::span<const SwapRecord> records, std::size_t pairs,
                                  std::size_t burn_in = 0);

struct RejectionEstimate {
  double rate = 0.0;
  double se = 0.0;
  std::size_t count = 0;
  /// No records for this pair.
  bool missing = true;
};

/// r_n = 1 - mean(alpha) with the standard error of the mean.
std::vector<RejectionEstimate> estimate_rejections(std::span<const SwapRecord> records,
                                                   std::size_t pairs, std::size_t burn_in = 0);
std::vector<RejectionEstimate> estimate_rejections(std::span<const PairStats> stats);

double global_barrier(std::span<const double> rejections);
double global_barrier(std::span<const RejectionEstimate> rejections);

struct RoundTripRate {
  double rate = 0.0;
  /// Some r_n = 1, so no machine can cross the ladder.
  bool saturated = false;
};

/// (2 + 2 sum r / (1 - r))^{-1}.
RoundTripRate round_trip_rate_formula(std::span<const double> rejections);

struct SklEstimate {
  /// 1/2 (mean W_fwd - mean W_bwd); the free-energy offset cancels.
  double value = 0.0;
  double se = 0.0;
  /// KL(P || Q) = mean W_fwd - dF and KL(Q || P) = dF - mean W_bwd, when dF is known.
  std::optional<double> kl_forward;
  std::optional<double> kl_backward;
};

SklEstimate skl_estimate(std::span<const double> work_forward,
                         std::span<const double> work_backward,
                         std::optional<double> delta_f = std::nullopt);
SklEstimate skl_estimate(const PairStats& stats, std::optional<double> delta_f = std::nullopt);

/// Round trips divided by the potential evaluations per swap.
double compute_normalized(std::uint64_t round_trips, AcceleratorKind kind, std::size_t steps,
                          bool modeled = false);

/// Simulates the index process with independent acceptances of probability
/// 1 - r_n. Returns the round trips after `iterations` steps.
std::uint64_t simulate_round_trips(std::span<const double> rejections, std::size_t iterations,
                                   std::uint64_t seed);

struct RunDiagnostics {
  std::vector<RejectionEstimate> rejections;
  std::vector<SklEstimate> skl;
  double barrier = 0.0;
  RoundTripRate tau_formula;
  std::uint64_t round_trips = 0;
  double tau_empirical = 0.0;
  double cn_round_trips = 0.0;
  AccelCost cost;
  std::size_t iterations = 0;
  std::size_t burn_in = 0;
  std::uint64_t swaps_proposed = 0;
  std::uint64_t swaps_accepted = 0;
  std::uint64_t swaps_nonfinite = 0;
};

/// Assembles diagnostics from per-pair statistics and the round-trip count.
RunDiagnostics summarize(std::span<const PairStats> stats, std::uint64_t round_trips,
                         std::size_t iterations, std::size_t burn_in, AcceleratorKind kind,
                         std::size_t steps, bool modeled = false);

}  // namespace apt
