#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apt/targets.hpp"

namespace apt {

/// Annealing grid 0 = b_0 < b_1 < ... < b_N = 1.
class Schedule {
 public:
  /// Throws std::invalid_argument unless the grid is valid.
  explicit Schedule(std::vector<double> betas);

  std::size_t pairs() const { return betas_.size() - 1; }
  std::size_t chains() const { return betas_.size(); }
  double operator[](std::size_t n) const { return betas_[n]; }
  const std::vector<double>& betas() const { return betas_; }

  /// Comma-separated, 17 significant digits.
  std::string serialize() const;
  static Schedule parse(std::string_view text);

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  std::vector<double> betas_;
};

/// betas[n] = n / N.
Schedule uniform_schedule(std::size_t pairs);

enum class PathKind { linear, analytic_vp };

std::string_view to_string(PathKind kind);
PathKind parse_path_kind(std::string_view text);

/// The family U^b of potentials between the reference and the target.
///
/// linear:       U^b = -(1-b) log eta + b U, so that pi^0 = eta and Z_0 = 1.
/// analytic_vp:  U^s is the exact negative log density of the variance-preserving
///               diffusion marginal started from a Gaussian mixture target, with
///               rate 1/(2(1-u)). The marginal at s is the mixture with means scaled
///               by sqrt(s) and component variance s*std^2 + 1 - s; at s = 0 it is
///               the standard normal.
class AnnealingPath {
 public:
  static AnnealingPath linear(TargetDensity reference, TargetDensity target);
  /// Throws ConfigError unless the target is a Gaussian mixture.
  static AnnealingPath analytic_vp(TargetDensity target);

  PathKind kind() const { return kind_; }
  const TargetDensity& reference() const { return reference_; }
  const TargetDensity& target() const { return target_; }
  std::size_t dim() const { return target_.dim(); }

  double potential_at(double beta, std::span<const double> x) const;
  void gradient_at(double beta, std::span<const double> x, std::span<double> out) const;
  double value_and_gradient_at(double beta, std::span<const double> x,
                               std::span<double> out) const;

  /// (1 - phi) U^{beta_a} + phi U^{beta_b}, with gradient when `out` is non-empty.
  double blend(double beta_a, double beta_b, double phi, std::span<const double> x,
               std::span<double> out) const;

  /// Applies the target's subspace constraint, if any.
  void project(std::span<double> x) const { target_.project(x); }

 private:
  AnnealingPath(PathKind kind, TargetDensity reference, TargetDensity target);
  double evaluate(double beta, std::span<const double> x, std::span<double> out) const;

  PathKind kind_;
  TargetDensity reference_;
  TargetDensity target_;
};

/// exp(-int_0^{1-s} g_u du) for the rate g_u = 1/(2(1-u)); equals sqrt(s).
double vp_mean_scale(double s);

/// Per-step noise level 1 - exp(-2 int g) between reverse times s_lo < s_hi;
/// equals 1 - s_lo/s_hi. Requires 0 < s_lo < s_hi <= 1.
double vp_alpha(double s_lo, double s_hi);

}  // namespace apt
