#include "apt/targets.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "apt/errors.hpp"

namespace apt {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::vector<double>& scratch() {
  thread_local std::vector<double> buf;
  return buf;
}

Point broadcast(const std::vector<double>& v, std::size_t dim, const char* field) {
  if (v.size() == 1) return Point(dim, v[0]);
  if (v.size() != dim) {
    throw ConfigError(field, "expected 1 or " + std::to_string(dim) + " values, got " +
                                 std::to_string(v.size()));
  }
  return v;
}

}  // namespace

void ParticleFrame::project(std::span<double> x) const {
  for (std::size_t k = 0; k < spatial_dim; ++k) {
    double mean = 0.0;
    for (std::size_t p = 0; p < particles; ++p) mean += x[p * spatial_dim + k];
    mean /= static_cast<double>(particles);
    for (std::size_t p = 0; p < particles; ++p) x[p * spatial_dim + k] -= mean;
  }
}

void DensityModel::sample(Stream&, std::span<double>) const {
  throw std::logic_error("density has no exact sampler");
}

// ---------------------------------------------------------------------------

DiagonalGaussian::DiagonalGaussian(Point mean, Point stddev, double offset,
                                   std::optional<ParticleFrame> frame)
    : mean_(std::move(mean)), stddev_(std::move(stddev)), offset_(offset), frame_(frame) {
  if (mean_.size() != stddev_.size()) throw std::invalid_argument("mean/stddev size mismatch");
  double log_det = 0.0;
  for (double s : stddev_) {
    if (!(s > 0.0)) throw ConfigError("target.stddev", "must be positive");
    log_det += std::log(s);
  }
  double eff_dim = static_cast<double>(mean_.size());
  if (frame_) {
    // only defined for the isotropic standard case
    eff_dim = static_cast<double>(frame_->free_dim());
  }
  log_norm_ = 0.5 * eff_dim * kLog2Pi + log_det;
}

double DiagonalGaussian::potential(std::span<const double> x) const {
  double q = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mean_[i]) / stddev_[i];
    q += z * z;
  }
  return 0.5 * q + log_norm_ + offset_;
}

double DiagonalGaussian::potential_and_gradient(std::span<const double> x,
                                                std::span<double> grad) const {
  double q = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mean_[i]) / stddev_[i];
    q += z * z;
    grad[i] = z / stddev_[i];
  }
  return 0.5 * q + log_norm_ + offset_;
}

void DiagonalGaussian::sample(Stream& rng, std::span<double> out) const {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mean_[i] + stddev_[i] * rng.normal();
  if (frame_) frame_->project(out);
}

// ---------------------------------------------------------------------------

GaussianMixture::GaussianMixture(std::vector<Point> means, double component_std)
    : means_(std::move(means)), dim_(0), active_(0), std_(component_std) {
  if (means_.empty()) throw ConfigError("target.components", "mixture needs at least one component");
  if (!(std_ > 0.0)) throw ConfigError("target.component_std", "must be positive");
  dim_ = means_.front().size();
  for (const auto& m : means_) {
    if (m.size() != dim_) throw std::invalid_argument("mixture means differ in dimension");
    for (std::size_t j = 0; j < dim_; ++j)
      if (m[j] != 0.0) active_ = std::max(active_, j + 1);
  }
}

double GaussianMixture::evaluate(std::span<const double> x, double mean_scale, double variance,
                                 std::span<double> grad) const {
  const std::size_t c = means_.size();
  auto& logits = scratch();
  logits.resize(c);

  double tail = 0.0;
  for (std::size_t j = active_; j < dim_; ++j) tail += x[j] * x[j];

  const double inv2v = 0.5 / variance;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c; ++i) {
    const double* mu = means_[i].data();
    double sq = tail;
    for (std::size_t j = 0; j < active_; ++j) {
      const double d = x[j] - mean_scale * mu[j];
      sq += d * d;
    }
    logits[i] = -sq * inv2v;
    max_logit = std::max(max_logit, logits[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    logits[i] = std::exp(logits[i] - max_logit);
    sum += logits[i];
  }
  const double log_density = max_logit + std::log(sum) - std::log(static_cast<double>(c)) -
                             0.5 * static_cast<double>(dim_) * (kLog2Pi + std::log(variance));

  if (!grad.empty()) {
    // grad U = (x - scale * sum_i w_i mu_i) / v
    const double inv_v = 1.0 / variance;
    for (std::size_t j = 0; j < dim_; ++j) grad[j] = x[j] * inv_v;
    for (std::size_t i = 0; i < c; ++i) {
      const double w = logits[i] / sum * mean_scale * inv_v;
      if (w == 0.0) continue;
      const double* mu = means_[i].data();
      for (std::size_t j = 0; j < active_; ++j) grad[j] -= w * mu[j];
    }
  }
  return -log_density;
}

double GaussianMixture::potential(std::span<const double> x) const {
  return evaluate(x, 1.0, std_ * std_, {});
}

double GaussianMixture::potential_and_gradient(std::span<const double> x,
                                               std::span<double> grad) const {
  return evaluate(x, 1.0, std_ * std_, grad);
}

void GaussianMixture::sample(Stream& rng, std::span<double> out) const {
  const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(means_.size()));
  const Point& mu = means_[std::min(i, means_.size() - 1)];
  for (std::size_t j = 0; j < dim_; ++j) out[j] = mu[j] + std_ * rng.normal();
}

// ---------------------------------------------------------------------------

ManyWell::ManyWell(std::size_t dim) : dim_(dim) {}

double ManyWell::potential(std::span<const double> x) const {
  double u = 0.0;
  for (std::size_t i = 0; i + 1 < dim_; i += 2) {
    const double a = x[i];
    const double b = x[i + 1];
    const double a2 = a * a;
    u += a2 * a2 - 6.0 * a2 - 0.5 * a + 0.5 * b * b;
  }
  return u;
}

double ManyWell::potential_and_gradient(std::span<const double> x, std::span<double> grad) const {
  double u = 0.0;
  for (std::size_t i = 0; i + 1 < dim_; i += 2) {
    const double a = x[i];
    const double b = x[i + 1];
    const double a2 = a * a;
    u += a2 * a2 - 6.0 * a2 - 0.5 * a + 0.5 * b * b;
    grad[i] = 4.0 * a2 * a - 12.0 * a - 0.5;
    grad[i + 1] = b;
  }
  return u;
}

double ManyWell::log_pair_normalizer() {
  static const double value = [] {
    // exp(-x^4 + 6x^2 + x/2) peaks near x = sqrt(3); shift by the peak value.
    constexpr double shift = 10.0;
    auto f = [](double t) { return std::exp(-t * t * t * t + 6.0 * t * t + 0.5 * t - shift); };
    double err = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -8.0, 8.0, 20, 1e-15,
                                                                      &err);
    return std::log(integral) + shift + 0.5 * kLog2Pi;
  }();
  return value;
}

// ---------------------------------------------------------------------------

DoubleWellParticles::DoubleWellParticles(std::size_t particles, std::size_t spatial_dim,
                                         DoubleWellParams params)
    : particles_(particles), spatial_dim_(spatial_dim), p_(params) {}

double DoubleWellParticles::potential(std::span<const double> x) const {
  double u = 0.0;
  for (std::size_t i = 0; i < particles_; ++i) {
    for (std::size_t j = i + 1; j < particles_; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < spatial_dim_; ++k) {
        const double diff = x[i * spatial_dim_ + k] - x[j * spatial_dim_ + k];
        d2 += diff * diff;
      }
      const double r = std::sqrt(d2) - p_.d0;
      const double r2 = r * r;
      u += p_.a * r + p_.b * r2 + p_.c * r2 * r2;
    }
  }
  // (1 / 2 tau) over ordered pairs == (1 / tau) over unordered pairs
  return u / p_.tau;
}

double DoubleWellParticles::potential_and_gradient(std::span<const double> x,
                                                   std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  double u = 0.0;
  for (std::size_t i = 0; i < particles_; ++i) {
    for (std::size_t j = i + 1; j < particles_; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < spatial_dim_; ++k) {
        const double diff = x[i * spatial_dim_ + k] - x[j * spatial_dim_ + k];
        d2 += diff * diff;
      }
      const double d = std::sqrt(d2);
      const double r = d - p_.d0;
      const double r2 = r * r;
      u += p_.a * r + p_.b * r2 + p_.c * r2 * r2;
      if (d > 0.0) {
        const double dfdd = (p_.a + 2.0 * p_.b * r + 4.0 * p_.c * r2 * r) / (p_.tau * d);
        for (std::size_t k = 0; k < spatial_dim_; ++k) {
          const double g = dfdd * (x[i * spatial_dim_ + k] - x[j * spatial_dim_ + k]);
          grad[i * spatial_dim_ + k] += g;
          grad[j * spatial_dim_ + k] -= g;
        }
      }
    }
  }
  return u / p_.tau;
}

// ---------------------------------------------------------------------------

TargetDensity::TargetDensity(std::string name, std::size_t dim,
                             std::shared_ptr<const DensityModel> model,
                             std::optional<double> log_normalizer,
                             std::optional<ParticleFrame> frame)
    : name_(std::move(name)),
      dim_(dim),
      model_(std::move(model)),
      log_normalizer_(log_normalizer),
      frame_(frame),
      counters_(std::make_shared<Counters>()) {
  if (dim_ == 0) throw ConfigError("target.dim", "must be positive");
  if (!model_) throw std::invalid_argument("null density model");
}

void TargetDensity::check_dim(std::size_t n) const {
  if (n != dim_) {
    throw std::invalid_argument("dimension mismatch: " + name_ + " expects " +
                                std::to_string(dim_) + ", got " + std::to_string(n));
  }
}

double TargetDensity::potential(std::span<const double> x) const {
  check_dim(x.size());
  counters_->potential.fetch_add(1, std::memory_order_relaxed);
  return model_->potential(x);
}

void TargetDensity::gradient(std::span<const double> x, std::span<double> out) const {
  check_dim(x.size());
  check_dim(out.size());
  counters_->gradient.fetch_add(1, std::memory_order_relaxed);
  model_->potential_and_gradient(x, out);
}

Point TargetDensity::gradient(std::span<const double> x) const {
  Point g(dim_);
  gradient(x, g);
  return g;
}

double TargetDensity::potential_and_gradient(std::span<const double> x,
                                             std::span<double> out) const {
  check_dim(x.size());
  check_dim(out.size());
  counters_->potential.fetch_add(1, std::memory_order_relaxed);
  counters_->gradient.fetch_add(1, std::memory_order_relaxed);
  return model_->potential_and_gradient(x, out);
}

void TargetDensity::sample(Stream& rng, std::span<double> out) const {
  check_dim(out.size());
  model_->sample(rng, out);
}

void TargetDensity::project(std::span<double> x) const {
  if (frame_) frame_->project(x);
}

const GaussianMixture* TargetDensity::mixture() const {
  return dynamic_cast<const GaussianMixture*>(model_.get());
}

EvalCounts TargetDensity::counts() const {
  return {counters_->potential.load(std::memory_order_relaxed),
          counters_->gradient.load(std::memory_order_relaxed)};
}

void TargetDensity::note_evaluation(bool with_gradient) const {
  counters_->potential.fetch_add(1, std::memory_order_relaxed);
  if (with_gradient) counters_->gradient.fetch_add(1, std::memory_order_relaxed);
}

void TargetDensity::reset_counts() const {
  counters_->potential.store(0);
  counters_->gradient.store(0);
}

// ---------------------------------------------------------------------------

TargetDensity build_target(const TargetSpec& spec) {
  if (spec.name == "gaussian") {
    std::size_t dim = spec.dim;
    if (dim == 0) dim = std::max(spec.mean.size(), spec.stddev.size());
    if (dim == 0) throw ConfigError("target.dim", "must be positive");
    Point mean = broadcast(spec.mean, dim, "target.mean");
    Point sd = broadcast(spec.stddev, dim, "target.stddev");
    auto model = std::make_shared<DiagonalGaussian>(std::move(mean), std::move(sd), spec.offset);
    return TargetDensity("gaussian", dim, std::move(model), -spec.offset);
  }

  if (spec.name == "gmm") {
    if (spec.dim < 2) throw ConfigError("target.dim", "gmm requires dim >= 2");
    if (spec.components == 0) throw ConfigError("target.components", "must be positive");
    if (!(spec.scale > 0.0)) throw ConfigError("target.scale", "must be positive");
    if (!(spec.loc_range > 0.0)) throw ConfigError("target.loc_range", "must be positive");
    if (!(spec.component_std > 0.0)) throw ConfigError("target.component_std", "must be positive");
    Stream rng(spec.seed, streams::kTarget);
    std::vector<Point> means(spec.components, Point(spec.dim, 0.0));
    for (auto& m : means) {
      for (std::size_t j = 0; j < 2; ++j) {
        m[j] = (2.0 * rng.uniform() - 1.0) * spec.loc_range / spec.scale;
      }
    }
    auto model = std::make_shared<GaussianMixture>(std::move(means), spec.component_std / spec.scale);
    return TargetDensity("gmm", spec.dim, std::move(model), 0.0);
  }

  if (spec.name == "manywell") {
    const std::size_t dim = spec.dim == 0 ? 32 : spec.dim;
    if (dim % 2 != 0) throw ConfigError("target.dim", "manywell requires an even dimension");
    auto model = std::make_shared<ManyWell>(dim);
    const double log_z = 0.5 * static_cast<double>(dim) * ManyWell::log_pair_normalizer();
    return TargetDensity("manywell", dim, std::move(model), log_z);
  }

  if (spec.name == "dw4") {
    if (spec.particles < 2) throw ConfigError("target.particles", "need at least two particles");
    if (spec.spatial_dim == 0) throw ConfigError("target.spatial_dim", "must be positive");
    const std::size_t dim = spec.particles * spec.spatial_dim;
    if (spec.dim != 0 && spec.dim != dim)
      throw ConfigError("target.dim", "dw4 dimension must equal particles * spatial_dim = " +
                                   std::to_string(dim));
    if (!(spec.double_well.tau > 0.0)) throw ConfigError("target.tau", "must be positive");
    auto model =
        std::make_shared<DoubleWellParticles>(spec.particles, spec.spatial_dim, spec.double_well);
    std::optional<ParticleFrame> frame;
    if (spec.remove_com) frame = ParticleFrame{spec.particles, spec.spatial_dim};
    return TargetDensity("dw4", dim, std::move(model), std::nullopt, frame);
  }

  throw ConfigError("target.name", "unknown target '" + spec.name + "'");
}

TargetDensity standard_reference(const TargetDensity& like) {
  const std::size_t dim = like.dim();
  std::optional<ParticleFrame> frame;
  if (like.frame()) frame = *like.frame();
  auto model = std::make_shared<DiagonalGaussian>(Point(dim, 0.0), Point(dim, 1.0), 0.0, frame);
  return TargetDensity("reference", dim, std::move(model), 0.0, frame);
}

}  // namespace apt
