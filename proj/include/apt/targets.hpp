#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apt/random.hpp"

namespace apt {

using Point = std::vector<double>;

struct EvalCounts {
  std::uint64_t potential = 0;
  std::uint64_t gradient = 0;
};

/// Zero centre-of-mass constraint for systems of interchangeable particles.
/// Points are laid out particle-major: (p0.x, p0.y, p1.x, p1.y, ...).
struct ParticleFrame {
  std::size_t particles = 0;
  std::size_t spatial_dim = 0;

  /// Removes the centre of mass in place.
  void project(std::span<double> x) const;
  /// Dimension of the constrained subspace.
  std::size_t free_dim() const { return (particles - 1) * spatial_dim; }
};

/// A potential U with its gradient. Implementations are immutable.
class DensityModel {
 public:
  virtual ~DensityModel() = default;

  virtual double potential(std::span<const double> x) const = 0;
  /// Writes grad U(x) into `grad` and returns U(x).
  virtual double potential_and_gradient(std::span<const double> x,
                                        std::span<double> grad) const = 0;

  virtual bool has_sampler() const { return false; }
  virtual void sample(Stream& rng, std::span<double> out) const;
};

/// Diagonal Gaussian, optionally shifted by an additive constant so that the
/// normaliser is exp(-offset). With a particle frame the density lives on the
/// zero centre-of-mass subspace.
class DiagonalGaussian final : public DensityModel {
 public:
  DiagonalGaussian(Point mean, Point stddev, double offset = 0.0,
                   std::optional<ParticleFrame> frame = std::nullopt);

  double potential(std::span<const double> x) const override;
  double potential_and_gradient(std::span<const double> x,
                                std::span<double> grad) const override;
  bool has_sampler() const override { return true; }
  void sample(Stream& rng, std::span<double> out) const override;

  const Point& mean() const { return mean_; }
  const Point& stddev() const { return stddev_; }
  double offset() const { return offset_; }

 private:
  Point mean_;
  Point stddev_;
  double offset_;
  double log_norm_;
  std::optional<ParticleFrame> frame_;
};

/// Equal-weight mixture of isotropic Gaussians. Means are stored densely but
/// only the leading `active_dims()` coordinates can be non-zero, which keeps
/// evaluation cost independent of zero padding.
class GaussianMixture final : public DensityModel {
 public:
  GaussianMixture(std::vector<Point> means, double component_std);

  double potential(std::span<const double> x) const override;
  double potential_and_gradient(std::span<const double> x,
                                std::span<double> grad) const override;
  bool has_sampler() const override { return true; }
  void sample(Stream& rng, std::span<double> out) const override;

  /// Negative log density of the mixture with every mean multiplied by
  /// `mean_scale` and every component variance replaced by `variance`.
  /// `grad` may be empty.
  double evaluate(std::span<const double> x, double mean_scale, double variance,
                  std::span<double> grad) const;

  std::size_t dim() const { return dim_; }
  std::size_t components() const { return means_.size(); }
  std::size_t active_dims() const { return active_; }
  const std::vector<Point>& means() const { return means_; }
  double component_std() const { return std_; }

 private:
  std::vector<Point> means_;
  std::size_t dim_;
  std::size_t active_;
  double std_;
};

/// 16-copy style ManyWell: sum over coordinate pairs of
/// x1^4 - 6 x1^2 - x1/2 + x2^2/2.
class ManyWell final : public DensityModel {
 public:
  explicit ManyWell(std::size_t dim);
  double potential(std::span<const double> x) const override;
  double potential_and_gradient(std::span<const double> x,
                                std::span<double> grad) const override;

  /// log of the normaliser of a single 2-D factor, by adaptive quadrature.
  static double log_pair_normalizer();

 private:
  std::size_t dim_;
};

struct DoubleWellParams {
  double a = 0.0;
  double b = -4.0;
  double c = 0.9;
  double tau = 1.0;
  /// Distance offset. Not given with the benchmark definition; 4 follows the
  /// original particle system this target comes from.
  double d0 = 4.0;
};

/// Pairwise quartic double-well particle system (DW-4 by default).
class DoubleWellParticles final : public DensityModel {
 public:
  DoubleWellParticles(std::size_t particles, std::size_t spatial_dim, DoubleWellParams params);
  double potential(std::span<const double> x) const override;
  double potential_and_gradient(std::span<const double> x,
                                std::span<double> grad) const override;

 private:
  std::size_t particles_;
  std::size_t spatial_dim_;
  DoubleWellParams p_;
};

/// A potential with evaluation counters and metadata. Copies share the model
/// and the counters; the density itself is immutable and safe to evaluate
/// concurrently.
class TargetDensity {
 public:
  TargetDensity(std::string name, std::size_t dim, std::shared_ptr<const DensityModel> model,
                std::optional<double> log_normalizer,
                std::optional<ParticleFrame> frame = std::nullopt);

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  std::optional<double> log_normalizer() const { return log_normalizer_; }

  double potential(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  Point gradient(std::span<const double> x) const;
  double potential_and_gradient(std::span<const double> x, std::span<double> out) const;

  bool has_exact_sampler() const { return model_->has_sampler(); }
  void sample(Stream& rng, std::span<double> out) const;

  const ParticleFrame* frame() const { return frame_ ? &*frame_ : nullptr; }
  void project(std::span<double> x) const;

  /// Non-null when the model is a Gaussian mixture.
  const GaussianMixture* mixture() const;
  const DensityModel& model() const { return *model_; }

  EvalCounts counts() const;
  void reset_counts() const;
  /// Records an evaluation performed directly on model(), e.g. by a derived path.
  void note_evaluation(bool with_gradient) const;

 private:
  void check_dim(std::size_t n) const;

  struct Counters {
    std::atomic<std::uint64_t> potential{0};
    std::atomic<std::uint64_t> gradient{0};
  };

  std::string name_;
  std::size_t dim_;
  std::shared_ptr<const DensityModel> model_;
  std::optional<double> log_normalizer_;
  std::optional<ParticleFrame> frame_;
  std::shared_ptr<Counters> counters_;
};

/// Parameters of a target family. Only the fields of the named family are read.
struct TargetSpec {
  std::string name = "gaussian";  ///< gaussian | gmm | dw4 | manywell
  std::size_t dim = 0;            ///< 0 selects the family default where one exists
  std::uint64_t seed = 0;

  // gaussian: mean/stddev of length 1 (broadcast) or dim
  std::vector<double> mean{0.0};
  std::vector<double> stddev{1.0};
  double offset = 0.0;

  // gmm
  std::size_t components = 40;
  double loc_range = 40.0;
  double component_std = 1.0;
  double scale = 40.0;

  // dw4
  std::size_t particles = 4;
  std::size_t spatial_dim = 2;
  DoubleWellParams double_well{};
  bool remove_com = true;
};

/// Builds a target from its spec. Throws ConfigError naming the offending field.
TargetDensity build_target(const TargetSpec& spec);

/// Standard normal reference matching the dimension and particle frame of `like`.
TargetDensity standard_reference(const TargetDensity& like);

}  // namespace apt
