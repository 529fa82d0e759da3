#include "apt/explorers.hpp"

#include "apt/errors.hpp"

namespace apt {

void HmcSettings::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size))
    throw ConfigError("explorer.step_size", "must be positive");
  if (leapfrog_steps == 0) throw ConfigError("explorer.leapfrog_steps", "must be positive");
}

void reference_resample(const TargetDensity& reference, Stream& rng, std::span<double> out) {
  if (!reference.has_exact_sampler())
    throw ConfigError("reference", "reference '" + reference.name() + "' has no exact sampler");
  reference.sample(rng, out);
}

}  // namespace apt
