#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apt/records.hpp"

namespace apt {

struct WorkEntry {
  std::size_t iteration = 0;
  double forward = 0.0;
  double backward = 0.0;
};

/// Work values per pair (index n - 1 for pair n), restricted to proposed iterations.
class WorkLog {
 public:
  explicit WorkLog(std::size_t pairs) : pairs_(pairs) {}

  /// Keeps records with iteration > burn_in. Throws std::invalid_argument on a
  /// record whose iteration parity does not match its pair.
  static WorkLog from_records(std::span<const SwapRecord> records, std::size_t pairs,
                              std::size_t burn_in = 0);

  void add(std::size_t pair, WorkEntry entry);
  std::size_t pairs() const { return pairs_.size(); }
  const std::vector<WorkEntry>& pair(std::size_t n) const { return pairs_.at(n - 1); }

 private:
  std::vector<std::vector<WorkEntry>> pairs_;
};

/// log(mean(exp(v))) by a max-shifted reduction. -inf for an empty input.
double log_mean_exp(std::span<const double> v);

/// sum_n -log mean exp(-W_fwd).
double forward_estimate(const WorkLog& log);
/// sum_n log mean exp(W_bwd).
double backward_estimate(const WorkLog& log);

struct FreeEnergyEstimate {
  double forward = 0.0;
  double backward = 0.0;
  /// (forward + backward) / 2.
  double averaged = 0.0;
  /// -averaged, the log normaliser of the target for a normalised reference.
  double log_z = 0.0;
  std::vector<double> pair_forward;
  std::vector<double> pair_backward;
};

/// Throws std::invalid_argument when a pair has no entries.
FreeEnergyEstimate averaged_estimate(const WorkLog& log);

/// Repeats the estimate on `resamples` subsets of `per_pair` entries per pair
/// drawn uniformly without replacement (all entries when a pair has fewer).
std::vector<FreeEnergyEstimate> subsample_estimates(const WorkLog& log, std::size_t resamples,
                                                    std::size_t per_pair, std::uint64_t seed);

}  // namespace apt
