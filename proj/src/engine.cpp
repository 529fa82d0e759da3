#include "apt/engine.hpp"

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apt {

struct Executor::Arena {
  tbb::task_arena arena;
  explicit Arena(int n) : arena(n) {}
};

Executor::Executor(std::size_t workers) : workers_(std::max<std::size_t>(workers, 1)) {
  if (workers_ > 1) arena_ = std::make_unique<Arena>(static_cast<int>(workers_));
}

Executor::~Executor() = default;

void Executor::for_each(std::size_t count, const std::function<void(std::size_t)>& fn) const {
  if (!arena_ || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  arena_->arena.execute([&] {
    tbb::parallel_for(std::size_t{0}, count, [&](std::size_t i) { fn(i); });
  });
}

EnsembleState initial_state(const AnnealingPath& path, const Schedule& schedule,
                            std::uint64_t seed) {
  EnsembleState s;
  s.index = IndexProcess(schedule.pairs());
  s.replicas.assign(schedule.chains(), Point(path.dim()));
  for (std::size_t m = 0; m < s.replicas.size(); ++m) {
    Stream rng(seed, streams::kInit + m);
    reference_resample(path.reference(), rng, s.replicas[m]);
  }
  return s;
}

void local_exploration(EnsembleState& state, const AnnealingPath& path, const Schedule& schedule,
                       const HmcSettings& hmc, std::uint64_t seed, ExplorerStats* stats,
                       const Executor& exec) {
  const std::size_t t = state.iteration;
  const ParticleFrame* frame = path.target().frame();
  exec.for_each(state.chains(), [&](std::size_t n) {
    Point& x = state.chain(n);
    Stream rng(seed, streams::kExplore + n, t);
    if (n == 0) {
      reference_resample(path.reference(), rng, x);
      return;
    }
    const double beta = schedule[n];
    auto energy = [&](std::span<const double> q, std::span<double> g) {
      return path.value_and_gradient_at(beta, q, g);
    };
    for (std::size_t s = 0; s < hmc.steps_per_iteration; ++s) {
      const HmcResult r = hmc_step(energy, x, hmc, rng, frame);
      if (stats) {
        ++stats->proposals[n];
        if (r.accepted) ++stats->accepted[n];
        if (r.nonfinite) ++stats->nonfinite[n];
      }
    }
  });
}

std::vector<SwapRecord> communication(EnsembleState& state, const Accelerator& acc,
                                      const AnnealingPath& path, const Schedule& schedule,
                                      std::size_t t, std::uint64_t seed, const Executor& exec,
                                      std::size_t* round_trips_completed) {
  const std::size_t N = schedule.pairs();
  std::vector<std::size_t> pairs;
  for (std::size_t n = (t % 2 == 1) ? 1 : 2; n <= N; n += 2) pairs.push_back(n);

  std::vector<SwapRecord> records(pairs.size());
  std::vector<PathProposal> proposals(pairs.size());
  exec.for_each(pairs.size(), [&](std::size_t j) {
    const std::size_t n = pairs[j];
    Stream rng(seed, streams::kSwap + n, t);
    PathProposal p = propose(acc, path, schedule, n, state.chain(n - 1), state.chain(n), rng);
    SwapRecord& r = records[j];
    r.iteration = t;
    r.pair = n;
    r.work_forward = p.work_forward;
    r.work_backward = p.work_backward;
    r.potential_evals = p.potential_evals;
    r.network_evals = p.network_evals;
    const double u = rng.uniform();
    if (!p.finite()) {
      r.nonfinite = true;
      r.alpha = 0.0;
    } else {
      const double log_a = p.work_backward - p.work_forward;
      r.alpha = log_a >= 0.0 ? 1.0 : std::exp(log_a);
      r.accepted = u < r.alpha;
    }
    proposals[j] = std::move(p);
  });

  // Replicas follow machines: the machine carrying x_lo moves up a level and
  // holds forward_path[K]; its partner moves down holding backward_path[0].
  std::vector<std::uint8_t> accepted(N + 1, 0);
  std::vector<std::size_t> movers(pairs.size());
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    if (!records[j].accepted) continue;
    const std::size_t n = pairs[j];
    movers[j] = state.index.machine_at(n - 1);
    state.chain(n - 1) = std::move(proposals[j].forward_path.back());
    state.chain(n) = std::move(proposals[j].backward_path.front());
    accepted[n] = 1;
  }
  const std::size_t completed = state.index.update(t, accepted);
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    if (records[j].accepted && state.index.machine_at(pairs[j]) != movers[j])
      throw std::logic_error("index process out of step with accepted swaps");
  }
  if (round_trips_completed) *round_trips_completed = completed;
  return records;
}

RunResult run(const AnnealingPath& path, const Schedule& schedule, const Accelerator& acc,
              const EngineConfig& config) {
  acc.validate(path, schedule);
  config.hmc.validate();

  const std::size_t N = schedule.pairs();
  const std::size_t burn_in = config.effective_burn_in();
  Executor exec(config.workers);

  RunResult out;
  out.explorer = ExplorerStats(N + 1);
  out.pair_statistics.assign(N, PairStats{});
  out.samples.dim = path.dim();
  out.samples.chains = N + 1;

  EnsembleState state = initial_state(path, schedule, config.seed);
  for (std::size_t t = 1; t <= config.iterations; ++t) {
    state.iteration = t;
    local_exploration(state, path, schedule, config.hmc, config.seed, &out.explorer, exec);
    std::size_t completed = 0;
    auto recs = communication(state, acc, path, schedule, t, config.seed, exec, &completed);
    for (std::size_t c = 0; c < completed; ++c) out.round_trip_iterations.push_back(t);
    if (t > burn_in)
      for (const auto& r : recs) out.pair_statistics[r.pair - 1].add(r);
    if (config.keep_records)
      out.records.insert(out.records.end(), recs.begin(), recs.end());
    if (t > burn_in && config.thin > 0 && t % config.thin == 0) {
      out.samples.iterations.push_back(t);
      for (std::size_t n = 0; n <= N; ++n) {
        const Point& x = state.chain(n);
        out.samples.values.insert(out.samples.values.end(), x.begin(), x.end());
      }
    }
  }

  out.index = state.index;
  out.diagnostics = summarize(out.pair_statistics, state.index.round_trips(), config.iterations,
                              burn_in, acc.kind, acc.steps, config.modeled_cost);
  out.final_state = std::move(state);
  return out;
}

}  // namespace apt
