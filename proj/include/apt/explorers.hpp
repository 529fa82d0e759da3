#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "apt/random.hpp"
#include "apt/targets.hpp"

namespace apt {

/// Fixed HMC settings with identity mass matrix.
struct HmcSettings {
  double step_size = 0.03;
  std::size_t leapfrog_steps = 5;
  /// Trajectories per PT iteration. 0 freezes the chain (used by tests).
  std::size_t steps_per_iteration = 1;

  /// Throws ConfigError on a non-positive step size or leapfrog count.
  void validate() const;
};

struct HmcResult {
  bool accepted = false;
  /// Energy or gradient became non-finite; the proposal was rejected.
  bool nonfinite = false;
  double energy_error = 0.0;
};

/// One Metropolis-adjusted leapfrog trajectory with standard normal momentum.
///
/// `energy(x, grad)` writes grad U(x) and returns U(x); it is called exactly
/// leapfrog_steps + 1 times. On rejection `x` is left unchanged. With a particle
/// frame the momentum is projected so the trajectory stays on the constrained
/// subspace.
template <class Energy>
HmcResult hmc_step(Energy&& energy, std::span<double> x, const HmcSettings& settings, Stream& rng,
                   const ParticleFrame* frame = nullptr) {
  const std::size_t d = x.size();
  thread_local std::vector<double> q, p, grad;
  q.assign(x.begin(), x.end());
  p.resize(d);
  grad.resize(d);

  rng.fill_normal(p);
  if (frame) frame->project(p);

  HmcResult result;
  const double eps = settings.step_size;
  const double u0 = energy(std::span<const double>(q), std::span<double>(grad));
  double kinetic0 = 0.0;
  for (double v : p) kinetic0 += 0.5 * v * v;

  double u1 = u0;
  for (std::size_t i = 0; i < d; ++i) p[i] -= 0.5 * eps * grad[i];
  for (std::size_t l = 0; l < settings.leapfrog_steps; ++l) {
    for (std::size_t i = 0; i < d; ++i) q[i] += eps * p[i];
    u1 = energy(std::span<const double>(q), std::span<double>(grad));
    const double scale = (l + 1 == settings.leapfrog_steps) ? 0.5 * eps : eps;
    for (std::size_t i = 0; i < d; ++i) p[i] -= scale * grad[i];
  }
  double kinetic1 = 0.0;
  for (double v : p) kinetic1 += 0.5 * v * v;

  const double h0 = u0 + kinetic0;
  const double h1 = u1 + kinetic1;
  if (!std::isfinite(h0) || !std::isfinite(h1)) {
    result.nonfinite = true;
    // consume the acceptance draw so the stream position does not depend on the outcome
    (void)rng.uniform();
    return result;
  }
  result.energy_error = h1 - h0;
  if (std::log(rng.uniform()) < h0 - h1) {
    if (frame) frame->project(q);
    std::copy(q.begin(), q.end(), x.begin());
    result.accepted = true;
  }
  return result;
}

/// Exact independent draw from the reference. Throws ConfigError when the
/// reference has no exact sampler.
void reference_resample(const TargetDensity& reference, Stream& rng, std::span<double> out);

}  // namespace apt
