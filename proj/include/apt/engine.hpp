#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "apt/accelerators.hpp"
#include "apt/annealing.hpp"
#include "apt/diagnostics.hpp"
#include "apt/explorers.hpp"
#include "apt/index_process.hpp"
#include "apt/records.hpp"

namespace apt {

/// Runs independent tasks inline (one worker) or on a bounded thread pool.
class Executor {
 public:
  explicit Executor(std::size_t workers = 1);
  ~Executor();
  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  std::size_t workers() const { return workers_; }
  void for_each(std::size_t count, const std::function<void(std::size_t)>& fn) const;

 private:
  std::size_t workers_;
  struct Arena;
  std::unique_ptr<Arena> arena_;
};

/// Replica points indexed by machine, plus the index process that maps
/// annealing levels to machines.
struct EnsembleState {
  std::vector<Point> replicas;
  IndexProcess index{0};
  std::size_t iteration = 0;

  std::size_t chains() const { return replicas.size(); }
  Point& chain(std::size_t n) { return replicas[index.machine_at(n)]; }
  const Point& chain(std::size_t n) const { return replicas[index.machine_at(n)]; }
};

/// Every chain starts from an independent reference draw.
EnsembleState initial_state(const AnnealingPath& path, const Schedule& schedule,
                            std::uint64_t seed);

struct ExplorerStats {
  std::vector<std::uint64_t> proposals;
  std::vector<std::uint64_t> accepted;
  std::vector<std::uint64_t> nonfinite;

  explicit ExplorerStats(std::size_t chains = 0)
      : proposals(chains), accepted(chains), nonfinite(chains) {}
};

/// Chain 0 is redrawn from the reference; chains 1..N take
/// `hmc.steps_per_iteration` HMC trajectories at their beta.
void local_exploration(EnsembleState& state, const AnnealingPath& path, const Schedule& schedule,
                       const HmcSettings& hmc, std::uint64_t seed, ExplorerStats* stats,
                       const Executor& exec);

/// Proposes every pair n with n = t (mod 2), accepts with probability
/// min(1, exp(W_bwd - W_fwd)), moves the accepted replicas to
/// (backward_path[0], forward_path[K]) and advances the index process.
/// Returns the records in pair order; `round_trips_completed` receives the
/// number of round trips finished at this iteration.
std::vector<SwapRecord> communication(EnsembleState& state, const Accelerator& acc,
                                      const AnnealingPath& path, const Schedule& schedule,
                                      std::size_t t, std::uint64_t seed, const Executor& exec,
                                      std::size_t* round_trips_completed = nullptr);

struct EngineConfig {
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  /// Defaults to 10% of the iterations.
  std::optional<std::size_t> burn_in;
  /// Store samples every `thin` iterations after burn-in; 0 stores none.
  std::size_t thin = 10;
  HmcSettings hmc;
  std::size_t workers = 1;
  bool keep_records = true;
  /// Count the accelerator drift or score as a network in cost accounting.
  bool modeled_cost = false;

  std::size_t effective_burn_in() const { return burn_in.value_or(iterations / 10); }
};

/// Thinned samples in chain order: values[(s * chains + n) * dim + i].
struct SampleStore {
  std::size_t dim = 0;
  std::size_t chains = 0;
  std::vector<std::size_t> iterations;
  std::vector<double> values;

  std::size_t size() const { return iterations.size(); }
  std::span<const double> at(std::size_t s, std::size_t chain) const {
    return {values.data() + (s * chains + chain) * dim, dim};
  }
};

struct RunResult {
  SampleStore samples;
  std::vector<SwapRecord> records;
  IndexProcess index{0};
  /// Iteration at which each round trip completed.
  std::vector<std::size_t> round_trip_iterations;
  ExplorerStats explorer;
  /// Post-burn-in per-pair statistics.
  std::vector<PairStats> pair_statistics;
  RunDiagnostics diagnostics;
  EnsembleState final_state;
};

/// T iterations of local exploration followed by communication, t = 1..T.
/// Deterministic given the seed, independent of the worker count.
RunResult run(const AnnealingPath& path, const Schedule& schedule, const Accelerator& acc,
              const EngineConfig& config);

}  // namespace apt
