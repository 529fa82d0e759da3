#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apt/annealing.hpp"
#include "apt/random.hpp"

namespace apt {

enum class AcceleratorKind { identity, affine_flow, langevin_bridge, analytic_diffusion };

std::string_view to_string(AcceleratorKind kind);
AcceleratorKind parse_accelerator_kind(std::string_view text);

/// Diagonal affine map T(x) = shift + exp(log_scale) * x.
struct AffineMap {
  Point shift;
  Point log_scale;

  void apply(std::span<const double> x, std::span<double> out) const;
  void invert(std::span<const double> y, std::span<double> out) const;
  /// log |det grad T| = sum(log_scale).
  double log_det() const;
};

/// One affine map per schedule pair; maps[n - 1] transports chain n-1 towards chain n.
struct AffineFlowParams {
  std::vector<AffineMap> maps;

  static AffineFlowParams identity(std::size_t pairs, std::size_t dim);
  const AffineMap& operator[](std::size_t n) const { return maps.at(n - 1); }

  /// Text format: header "affine_flow <dim> <N>", then one line per pair with
  /// dim shift values followed by dim log-scale values.
  std::string serialize() const;
  static AffineFlowParams parse(std::string_view text);
};

/// b(s, x) written into `out`.
using DriftFn = std::function<void(double s, std::span<const double> x, std::span<double> out)>;
/// phi(s), monotone with phi(0) = 0 and phi(1) = 1.
using InterpolationFn = std::function<double(double s)>;

struct LangevinBridgeParams {
  /// One entry per pair, or a single entry shared by all pairs.
  std::vector<double> sigma{1.0};
  /// Empty means b = 0.
  DriftFn drift;
  /// Empty means phi(s) = s.
  InterpolationFn phi;
  /// Counts the drift as a network call in cost accounting.
  bool drift_is_model = false;

  double sigma_for(std::size_t n) const;
};

struct Accelerator {
  AcceleratorKind kind = AcceleratorKind::identity;
  /// Number of transition steps K.
  std::size_t steps = 0;
  AffineFlowParams flow;
  LangevinBridgeParams langevin;
  /// Recompute every work value from the stored path and compare with the
  /// value accumulated during simulation.
  bool verify_work = false;

  /// Throws ConfigError on an inconsistent kind/K combination or parameters
  /// that do not match the schedule and path.
  void validate(const AnnealingPath& path, const Schedule& schedule) const;
};

struct PathProposal {
  std::vector<Point> forward_path;
  std::vector<Point> backward_path;
  double work_forward = 0.0;
  double work_backward = 0.0;
  /// Evaluations spent on one path (both paths cost the same).
  std::uint64_t potential_evals = 0;
  std::uint64_t network_evals = 0;

  bool finite() const;
};

/// Simulates the forward path from x_lo (chain n-1) and the backward path from
/// x_hi (chain n) and evaluates the work of both.
PathProposal propose(const Accelerator& acc, const AnnealingPath& path, const Schedule& schedule,
                     std::size_t n, std::span<const double> x_lo, std::span<const double> x_hi,
                     Stream& rng);

/// U^n(T^n(x0)) - U^{n-1}(x0) - sum(log_scale^n).
double flow_work(const AffineFlowParams& params, const AnnealingPath& path,
                 const Schedule& schedule, std::size_t n, std::span<const double> x0);

/// A point on a bridge with the potential and gradient of the bridge
/// interpolant at that point's time.
struct BridgeState {
  Point x;
  Point grad;
  double potential = 0.0;
};

/// One simulated transition together with its own log density and the log
/// density of the opposite-direction kernel evaluated on the same pair of points.
struct Transition {
  BridgeState next;
  double log_density = 0.0;
  double reverse_log_density = 0.0;
};

/// Controlled Langevin bridge between chains n-1 and n with K steps on the
/// grid s_k = k / K and interpolant U_s = (1 - phi_s) U^{n-1} + phi_s U^n.
///
/// Forward kernel:  N(x - sigma^2 grad U_{s_{k-1}}(x) ds + b(s_{k-1}, x) ds, 2 sigma^2 ds).
/// Backward kernel: N(x - sigma^2 grad U_{s_k}(x) ds - b(s_k, x) ds, 2 sigma^2 ds).
class LangevinBridge {
 public:
  LangevinBridge(const AnnealingPath& path, const Schedule& schedule, std::size_t n,
                 std::size_t steps, const LangevinBridgeParams& params);

  std::size_t steps() const { return steps_; }
  double time(std::size_t k) const;
  double step_size() const { return ds_; }
  double noise_variance() const { return 2.0 * sigma_ * sigma_ * ds_; }

  /// Evaluates U_{s_k} and its gradient at x.
  BridgeState state(std::size_t k, std::span<const double> x) const;
  /// Mean of P_k given the state at time k-1.
  void forward_mean(std::size_t k, const BridgeState& from, std::span<double> out) const;
  /// Mean of Q_{k-1} given the state at time k.
  void backward_mean(std::size_t k, const BridgeState& from, std::span<double> out) const;
  double log_forward(std::size_t k, const BridgeState& from, std::span<const double> to) const;
  double log_backward(std::size_t k, const BridgeState& from, std::span<const double> to) const;

  const AnnealingPath& path() const { return *path_; }

 private:
  double phi(double s) const;

  const AnnealingPath* path_;
  const LangevinBridgeParams* params_;
  double beta_lo_;
  double beta_hi_;
  std::size_t steps_;
  double sigma_;
  double ds_;
};

Transition langevin_forward_step(const LangevinBridge& bridge, std::size_t k,
                                 const BridgeState& from, Stream& rng);
Transition langevin_backward_step(const LangevinBridge& bridge, std::size_t k,
                                  const BridgeState& from, Stream& rng);
/// Work of a stored path x_0..x_K, recomputing every density.
double langevin_work(std::span<const Point> points, const LangevinBridge& bridge);

/// Closed-form VP diffusion bridge on the analytic path between s_{n-1} and
/// s_n, with grid s_{n,k} = s_{n-1} + k (s_n - s_{n-1}) / K.
///
/// Backward (noising) kernel: N(sqrt(1 - a) x_k, a I).
/// Forward (denoising) kernel: N(sqrt(1 - a) x + 2 (1 - sqrt(1 - a)) (x + score(x)), a I)
/// with the exact score of the mixture marginal at s_{n,k-1}.
class DiffusionBridge {
 public:
  /// Throws ConfigError unless the path is analytic_vp.
  DiffusionBridge(const AnnealingPath& path, const Schedule& schedule, std::size_t n,
                  std::size_t steps);

  std::size_t steps() const { return steps_; }
  double time(std::size_t k) const;
  /// Noise level of step k (between times k-1 and k); 1 when time(k-1) = 0.
  double alpha(std::size_t k) const;

  BridgeState state(std::size_t k, std::span<const double> x) const;
  void forward_mean(std::size_t k, const BridgeState& from, std::span<double> out) const;
  void backward_mean(std::size_t k, std::span<const double> x_k, std::span<double> out) const;
  double log_forward(std::size_t k, const BridgeState& from, std::span<const double> to) const;
  double log_backward(std::size_t k, std::span<const double> x_k,
                      std::span<const double> to) const;

  const AnnealingPath& path() const { return *path_; }

 private:
  const AnnealingPath* path_;
  double s_lo_;
  double s_hi_;
  std::size_t steps_;
};

Transition diffusion_forward_step(const DiffusionBridge& bridge, std::size_t k,
                                  const BridgeState& from, Stream& rng);
Transition diffusion_backward_step(const DiffusionBridge& bridge, std::size_t k,
                                   const BridgeState& from, Stream& rng);
double diffusion_work(std::span<const Point> points, const DiffusionBridge& bridge);

struct AccelCost {
  std::uint64_t potential = 0;
  std::uint64_t network = 0;
  friend bool operator==(const AccelCost&, const AccelCost&) = default;
};

/// Evaluations per swap. `modeled` marks a learned drift, score or flow network.
/// Throws std::invalid_argument on an inconsistent kind/K pair.
AccelCost accel_cost(AcceleratorKind kind, std::size_t steps, bool modeled = false);

/// log N(y; mean, variance * I) on a space of dimension `dim`.
double log_normal_iso(std::span<const double> y, std::span<const double> mean, double variance,
                      std::size_t dim);

}  // namespace apt
