#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apt/accelerators.hpp"
#include "apt/annealing.hpp"
#include "apt/engine.hpp"
#include "apt/explorers.hpp"

namespace apt {

/// Minimum gap kept between adjacent tuned betas.
inline constexpr double kScheduleSeparation = 1e-9;

/// Places the interior betas so that the piecewise-linear cumulative rejection
/// through (beta_n, r_1 + ... + r_n) is split into N equal parts. Returns the
/// schedule unchanged when every rejection is zero.
Schedule tune_schedule(std::span<const double> rejections, const Schedule& schedule);

struct TunerState {
  Schedule schedule;
  std::vector<double> rejections;
  std::size_t round = 0;
};

struct TuningSettings {
  std::size_t rounds = 10;
  std::size_t pilot_iterations = 600;
  std::size_t pilot_burn_in = 100;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Alternates pilot runs and tune_schedule. Returns the initial schedule
/// followed by one state per round (rounds + 1 entries); each state holds the
/// pilot rejections measured on the schedule it replaced.
std::vector<TunerState> run_tuning(const AnnealingPath& path, const Schedule& initial,
                                   const Accelerator& acc, const HmcSettings& hmc,
                                   const TuningSettings& settings);

struct FitSettings {
  double learning_rate = 1e-2;
  std::size_t batch = 512;
  std::size_t steps = 2000;
  /// Consecutive loss increases before the learning rate is halved.
  std::size_t patience = 50;
  /// Abort when any |log_scale| exceeds this.
  double max_log_scale = 10.0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct FitResult {
  AffineFlowParams params;
  /// Per pair, the loss of the accepted iterate after each step.
  std::vector<std::vector<double>> loss_trace;
};

/// Samples of chain n in the thinned store.
std::vector<Point> chain_samples(const SampleStore& store, std::size_t chain);

/// Empirical symmetric KL surrogate for one pair,
/// 1/2 [mean_lo W_fwd(x) - mean_hi W_bwd(y)], and its gradient with respect to
/// (shift, log_scale) written into grad_shift and grad_log_scale.
double flow_loss(const AffineMap& map, const AnnealingPath& path, const Schedule& schedule,
                 std::size_t n, std::span<const Point> lo, std::span<const Point> hi,
                 std::span<double> grad_shift, std::span<double> grad_log_scale);

/// Fits one diagonal affine map per pair by Adam on flow_loss, starting from
/// the identity. `samples[n]` holds draws from chain n. Throws FitError when
/// the scale diverges and std::invalid_argument when a chain has fewer than
/// `batch` samples. A chain with exactly `batch` samples is used whole at
/// every step.
FitResult fit_affine_flows(const std::vector<std::vector<Point>>& samples,
                           const AnnealingPath& path, const Schedule& schedule,
                           const FitSettings& settings);

}  // namespace apt
