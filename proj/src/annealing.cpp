#include "apt/annealing.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "apt/errors.hpp"

namespace apt {

Schedule::Schedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.size() < 2) throw std::invalid_argument("schedule needs at least two points");
  if (betas_.front() != 0.0) throw std::invalid_argument("schedule must start at 0");
  if (betas_.back() != 1.0) throw std::invalid_argument("schedule must end at 1");
  for (std::size_t n = 1; n < betas_.size(); ++n) {
    if (!(betas_[n] > betas_[n - 1]))
      throw std::invalid_argument("schedule must be strictly increasing (index " +
                                  std::to_string(n) + ")");
  }
}

std::string Schedule::serialize() const {
  std::string out;
  char buf[40];
  for (std::size_t n = 0; n < betas_.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g", betas_[n]);
    if (n) out += ',';
    out += buf;
  }
  return out;
}

Schedule Schedule::parse(std::string_view text) {
  std::vector<double> betas;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string token(text.substr(pos, end - pos));
    const auto first = token.find_first_not_of(" \t\r\n");
    const auto last = token.find_last_not_of(" \t\r\n");
    if (first == std::string::npos) throw std::invalid_argument("empty schedule entry");
    token = token.substr(first, last - first + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size())
      throw std::invalid_argument("bad schedule entry '" + token + "'");
    betas.push_back(v);
    pos = end + 1;
  }
  return Schedule(std::move(betas));
}

Schedule uniform_schedule(std::size_t pairs) {
  if (pairs == 0) throw std::invalid_argument("uniform_schedule: N must be >= 1");
  std::vector<double> betas(pairs + 1);
  for (std::size_t n = 0; n <= pairs; ++n)
    betas[n] = static_cast<double>(n) / static_cast<double>(pairs);
  return Schedule(std::move(betas));
}

std::string_view to_string(PathKind kind) {
  return kind == PathKind::linear ? "linear" : "analytic_vp";
}

PathKind parse_path_kind(std::string_view text) {
  if (text == "linear") return PathKind::linear;
  if (text == "analytic_vp") return PathKind::analytic_vp;
  throw ConfigError("path.kind", "unknown path kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

AnnealingPath::AnnealingPath(PathKind kind, TargetDensity reference, TargetDensity target)
    : kind_(kind), reference_(std::move(reference)), target_(std::move(target)) {
  if (reference_.dim() != target_.dim())
    throw ConfigError("reference", "reference and target dimensions differ");
}

AnnealingPath AnnealingPath::linear(TargetDensity reference, TargetDensity target) {
  return AnnealingPath(PathKind::linear, std::move(reference), std::move(target));
}

AnnealingPath AnnealingPath::analytic_vp(TargetDensity target) {
  if (target.mixture() == nullptr)
    throw ConfigError("path.kind", "analytic_vp requires a gmm target");
  TargetDensity reference = standard_reference(target);
  return AnnealingPath(PathKind::analytic_vp, std::move(reference), std::move(target));
}

double AnnealingPath::evaluate(double beta, std::span<const double> x,
                               std::span<double> out) const {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::domain_error("beta outside [0, 1]: " + std::to_string(beta));
  const bool want_grad = !out.empty();

  if (kind_ == PathKind::analytic_vp) {
    if (x.size() != dim()) throw std::invalid_argument("dimension mismatch");
    const GaussianMixture& gmm = *target_.mixture();
    const double s2 = gmm.component_std() * gmm.component_std();
    const double variance = beta * s2 + (1.0 - beta);
    target_.note_evaluation(want_grad);
    return gmm.evaluate(x, vp_mean_scale(beta), variance, out);
  }

  if (beta == 1.0) {
    return want_grad ? target_.potential_and_gradient(x, out) : target_.potential(x);
  }
  if (beta == 0.0) {
    return want_grad ? reference_.potential_and_gradient(x, out) : reference_.potential(x);
  }
  if (!want_grad) return (1.0 - beta) * reference_.potential(x) + beta * target_.potential(x);

  thread_local Point tmp;
  tmp.resize(x.size());
  const double ur = reference_.potential_and_gradient(x, out);
  const double ut = target_.potential_and_gradient(x, tmp);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - beta) * out[i] + beta * tmp[i];
  return (1.0 - beta) * ur + beta * ut;
}

double AnnealingPath::potential_at(double beta, std::span<const double> x) const {
  return evaluate(beta, x, {});
}

void AnnealingPath::gradient_at(double beta, std::span<const double> x,
                                std::span<double> out) const {
  if (out.size() != dim()) throw std::invalid_argument("dimension mismatch");
  evaluate(beta, x, out);
}

double AnnealingPath::value_and_gradient_at(double beta, std::span<const double> x,
                                            std::span<double> out) const {
  if (out.size() != dim()) throw std::invalid_argument("dimension mismatch");
  return evaluate(beta, x, out);
}

double AnnealingPath::blend(double beta_a, double beta_b, double phi, std::span<const double> x,
                            std::span<double> out) const {
  if (phi == 0.0) return evaluate(beta_a, x, out);
  if (phi == 1.0) return evaluate(beta_b, x, out);
  if (kind_ == PathKind::linear) {
    // U^b is affine in b, so the blend is the path at the interpolated beta.
    return evaluate(beta_a + phi * (beta_b - beta_a), x, out);
  }
  thread_local Point tmp;
  tmp.resize(out.size());
  const double ua = evaluate(beta_a, x, out);
  const double ub = evaluate(beta_b, x, tmp);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - phi) * out[i] + phi * tmp[i];
  return (1.0 - phi) * ua + phi * ub;
}

// ---------------------------------------------------------------------------

double vp_mean_scale(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("vp_mean_scale: s outside [0, 1]");
  return std::sqrt(s);
}

double vp_alpha(double s_lo, double s_hi) {
  if (!(s_lo > 0.0)) throw std::domain_error("vp_alpha: s_lo must be positive");
  if (!(s_lo < s_hi)) throw std::domain_error("vp_alpha: s_lo must be below s_hi");
  if (s_hi > 1.0) throw std::domain_error("vp_alpha: s_hi must be at most 1");
  return 1.0 - s_lo / s_hi;
}

}  // namespace apt
