#include "apt/accelerators.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "apt/errors.hpp"

namespace apt {

std::string_view to_string(AcceleratorKind kind) {
  switch (kind) {
    case AcceleratorKind::identity: return "identity";
    case AcceleratorKind::affine_flow: return "affine_flow";
    case AcceleratorKind::langevin_bridge: return "langevin_bridge";
    case AcceleratorKind::analytic_diffusion: return "analytic_diffusion";
  }
  return "identity";
}

AcceleratorKind parse_accelerator_kind(std::string_view text) {
  if (text == "identity") return AcceleratorKind::identity;
  if (text == "affine_flow") return AcceleratorKind::affine_flow;
  if (text == "langevin_bridge") return AcceleratorKind::langevin_bridge;
  if (text == "analytic_diffusion") return AcceleratorKind::analytic_diffusion;
  throw ConfigError("accelerator.kind", "unknown accelerator '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Affine flows

void AffineMap::apply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = shift[i] + std::exp(log_scale[i]) * x[i];
}

void AffineMap::invert(std::span<const double> y, std::span<double> out) const {
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] - shift[i]) * std::exp(-log_scale[i]);
}

double AffineMap::log_det() const {
  double s = 0.0;
  for (double v : log_scale) s += v;
  return s;
}

AffineFlowParams AffineFlowParams::identity(std::size_t pairs, std::size_t dim) {
  AffineFlowParams p;
  p.maps.assign(pairs, AffineMap{Point(dim, 0.0), Point(dim, 0.0)});
  return p;
}

std::string AffineFlowParams::serialize() const {
  const std::size_t dim = maps.empty() ? 0 : maps.front().shift.size();
  std::string out = "affine_flow " + std::to_string(dim) + " " + std::to_string(maps.size()) + "\n";
  char buf[40];
  for (const auto& m : maps) {
    for (std::size_t i = 0; i < 2 * dim; ++i) {
      const double v = i < dim ? m.shift[i] : m.log_scale[i - dim];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      if (i) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

AffineFlowParams AffineFlowParams::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag;
  std::size_t dim = 0, pairs = 0;
  if (!(in >> tag >> dim >> pairs) || tag != "affine_flow")
    throw ConfigError("accelerator.flow_file", "expected header 'affine_flow <dim> <N>'");
  AffineFlowParams p;
  p.maps.resize(pairs);
  for (std::size_t n = 0; n < pairs; ++n) {
    auto& m = p.maps[n];
    m.shift.resize(dim);
    m.log_scale.resize(dim);
    for (std::size_t i = 0; i < 2 * dim; ++i) {
      double v = 0.0;
      if (!(in >> v))
        throw ConfigError("accelerator.flow_file",
                          "truncated parameters for pair " + std::to_string(n + 1));
      (i < dim ? m.shift[i] : m.log_scale[i - dim]) = v;
    }
  }
  return p;
}

double flow_work(const AffineFlowParams& params, const AnnealingPath& path,
                 const Schedule& schedule, std::size_t n, std::span<const double> x0) {
  const AffineMap& map = params[n];
  thread_local Point x1;
  x1.resize(x0.size());
  map.apply(x0, x1);
  return path.potential_at(schedule[n], x1) - path.potential_at(schedule[n - 1], x0) -
         map.log_det();
}

// ---------------------------------------------------------------------------

double LangevinBridgeParams::sigma_for(std::size_t n) const {
  if (sigma.size() == 1) return sigma.front();
  return sigma.at(n - 1);
}

void Accelerator::validate(const AnnealingPath& path, const Schedule& schedule) const {
  const std::size_t pairs = schedule.pairs();
  switch (kind) {
    case AcceleratorKind::identity:
      if (steps != 0) throw ConfigError("accelerator.K", "identity requires K = 0");
      break;
    case AcceleratorKind::affine_flow:
      if (steps != 1) throw ConfigError("accelerator.K", "affine_flow requires K = 1");
      if (flow.maps.size() != pairs)
        throw ConfigError("accelerator.flow_file", "expected " + std::to_string(pairs) +
                                                       " maps, got " +
                                                       std::to_string(flow.maps.size()));
      for (const auto& m : flow.maps) {
        if (m.shift.size() != path.dim() || m.log_scale.size() != path.dim())
          throw ConfigError("accelerator.flow_file", "map dimension differs from the target");
        for (double v : m.log_scale)
          if (!std::isfinite(v)) throw ConfigError("accelerator.flow_file", "non-finite log_scale");
      }
      break;
    case AcceleratorKind::langevin_bridge:
      if (steps == 0) throw ConfigError("accelerator.K", "langevin_bridge requires K >= 1");
      if (langevin.sigma.size() != 1 && langevin.sigma.size() != pairs)
        throw ConfigError("accelerator.sigma", "expected 1 or N values");
      for (double s : langevin.sigma)
        if (!(s > 0.0) || !std::isfinite(s))
          throw ConfigError("accelerator.sigma", "must be positive");
      break;
    case AcceleratorKind::analytic_diffusion:
      if (path.kind() != PathKind::analytic_vp)
        throw ConfigError("accelerator.kind", "analytic_diffusion requires the analytic_vp path");
      break;
  }
}

bool PathProposal::finite() const {
  return std::isfinite(work_forward) && std::isfinite(work_backward);
}

double log_normal_iso(std::span<const double> y, std::span<const double> mean, double variance,
                      std::size_t dim) {
  double q = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - mean[i];
    q += r * r;
  }
  return -0.5 * q / variance -
         0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi * variance);
}

namespace {

std::size_t effective_dim(const AnnealingPath& path) {
  const ParticleFrame* f = path.target().frame();
  return f ? f->free_dim() : path.dim();
}

void add_noise(const AnnealingPath& path, double variance, Stream& rng, std::span<double> x) {
  thread_local Point xi;
  xi.resize(x.size());
  rng.fill_normal(xi);
  path.project(xi);
  const double sd = std::sqrt(variance);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += sd * xi[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Langevin bridge

LangevinBridge::LangevinBridge(const AnnealingPath& path, const Schedule& schedule, std::size_t n,
                               std::size_t steps, const LangevinBridgeParams& params)
    : path_(&path),
      params_(&params),
      beta_lo_(schedule[n - 1]),
      beta_hi_(schedule[n]),
      steps_(steps),
      sigma_(params.sigma_for(n)),
      ds_(1.0 / static_cast<double>(steps)) {
  if (steps == 0) throw std::invalid_argument("LangevinBridge: K must be positive");
}

double LangevinBridge::time(std::size_t k) const {
  if (k >= steps_) return 1.0;
  return static_cast<double>(k) / static_cast<double>(steps_);
}

double LangevinBridge::phi(double s) const {
  if (s == 0.0 || s == 1.0 || !params_->phi) return s;
  return params_->phi(s);
}

BridgeState LangevinBridge::state(std::size_t k, std::span<const double> x) const {
  BridgeState st;
  st.x.assign(x.begin(), x.end());
  st.grad.resize(x.size());
  st.potential = path_->blend(beta_lo_, beta_hi_, phi(time(k)), x, st.grad);
  return st;
}

void LangevinBridge::forward_mean(std::size_t k, const BridgeState& from,
                                  std::span<double> out) const {
  const double c = sigma_ * sigma_ * ds_;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = from.x[i] - c * from.grad[i];
  if (params_->drift) {
    thread_local Point b;
    b.resize(out.size());
    params_->drift(time(k - 1), from.x, b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i] * ds_;
  }
}

void LangevinBridge::backward_mean(std::size_t k, const BridgeState& from,
                                   std::span<double> out) const {
  const double c = sigma_ * sigma_ * ds_;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = from.x[i] - c * from.grad[i];
  if (params_->drift) {
    thread_local Point b;
    b.resize(out.size());
    params_->drift(time(k), from.x, b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i] * ds_;
  }
}

double LangevinBridge::log_forward(std::size_t k, const BridgeState& from,
                                   std::span<const double> to) const {
  thread_local Point m;
  m.resize(to.size());
  forward_mean(k, from, m);
  return log_normal_iso(to, m, noise_variance(), effective_dim(*path_));
}

double LangevinBridge::log_backward(std::size_t k, const BridgeState& from,
                                    std::span<const double> to) const {
  thread_local Point m;
  m.resize(to.size());
  backward_mean(k, from, m);
  return log_normal_iso(to, m, noise_variance(), effective_dim(*path_));
}

Transition langevin_forward_step(const LangevinBridge& bridge, std::size_t k,
                                 const BridgeState& from, Stream& rng) {
  Point x(from.x.size());
  bridge.forward_mean(k, from, x);
  add_noise(bridge.path(), bridge.noise_variance(), rng, x);
  Transition t;
  t.log_density = bridge.log_forward(k, from, x);
  t.next = bridge.state(k, x);
  t.reverse_log_density = bridge.log_backward(k, t.next, from.x);
  return t;
}

Transition langevin_backward_step(const LangevinBridge& bridge, std::size_t k,
                                  const BridgeState& from, Stream& rng) {
  Point x(from.x.size());
  bridge.backward_mean(k, from, x);
  add_noise(bridge.path(), bridge.noise_variance(), rng, x);
  Transition t;
  t.log_density = bridge.log_backward(k, from, x);
  t.next = bridge.state(k - 1, x);
  t.reverse_log_density = bridge.log_forward(k, t.next, from.x);
  return t;
}

namespace {

template <class Bridge>
double recompute_work(std::span<const Point> points, const Bridge& bridge) {
  const std::size_t K = bridge.steps();
  if (points.size() != K + 1) throw std::invalid_argument("path must have K + 1 points");
  std::vector<BridgeState> st;
  st.reserve(K + 1);
  for (std::size_t k = 0; k <= K; ++k) st.push_back(bridge.state(k, points[k]));
  double w = st[K].potential - st[0].potential;
  for (std::size_t k = 1; k <= K; ++k) {
    w += bridge.log_forward(k, st[k - 1], points[k]);
    if constexpr (std::is_same_v<Bridge, LangevinBridge>) {
      w -= bridge.log_backward(k, st[k], points[k - 1]);
    } else {
      w -= bridge.log_backward(k, points[k], points[k - 1]);
    }
  }
  return w;
}

}  // namespace

double langevin_work(std::span<const Point> points, const LangevinBridge& bridge) {
  return recompute_work(points, bridge);
}

// ---------------------------------------------------------------------------
// Analytic diffusion bridge

DiffusionBridge::DiffusionBridge(const AnnealingPath& path, const Schedule& schedule,
                                 std::size_t n, std::size_t steps)
    : path_(&path), s_lo_(schedule[n - 1]), s_hi_(schedule[n]), steps_(steps) {
  if (path.kind() != PathKind::analytic_vp)
    throw ConfigError("accelerator.kind", "analytic_diffusion requires the analytic_vp path");
  if (steps == 0) throw std::invalid_argument("DiffusionBridge: K must be positive");
}

double DiffusionBridge::time(std::size_t k) const {
  if (k == 0) return s_lo_;
  if (k >= steps_) return s_hi_;
  return s_lo_ + static_cast<double>(k) * (s_hi_ - s_lo_) / static_cast<double>(steps_);
}

double DiffusionBridge::alpha(std::size_t k) const {
  const double lo = time(k - 1);
  if (lo == 0.0) return 1.0;
  return vp_alpha(lo, time(k));
}

BridgeState DiffusionBridge::state(std::size_t k, std::span<const double> x) const {
  BridgeState st;
  st.x.assign(x.begin(), x.end());
  st.grad.resize(x.size());
  st.potential = path_->value_and_gradient_at(time(k), x, st.grad);
  return st;
}

void DiffusionBridge::forward_mean(std::size_t k, const BridgeState& from,
                                   std::span<double> out) const {
  const double c = std::sqrt(1.0 - alpha(k));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = c * from.x[i] + 2.0 * (1.0 - c) * (from.x[i] - from.grad[i]);
}

void DiffusionBridge::backward_mean(std::size_t k, std::span<const double> x_k,
                                    std::span<double> out) const {
  const double c = std::sqrt(1.0 - alpha(k));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * x_k[i];
}

double DiffusionBridge::log_forward(std::size_t k, const BridgeState& from,
                                    std::span<const double> to) const {
  thread_local Point m;
  m.resize(to.size());
  forward_mean(k, from, m);
  return log_normal_iso(to, m, alpha(k), effective_dim(*path_));
}

double DiffusionBridge::log_backward(std::size_t k, std::span<const double> x_k,
                                     std::span<const double> to) const {
  thread_local Point m;
  m.resize(to.size());
  backward_mean(k, x_k, m);
  return log_normal_iso(to, m, alpha(k), effective_dim(*path_));
}

Transition diffusion_forward_step(const DiffusionBridge& bridge, std::size_t k,
                                  const BridgeState& from, Stream& rng) {
  Point x(from.x.size());
  bridge.forward_mean(k, from, x);
  add_noise(bridge.path(), bridge.alpha(k), rng, x);
  Transition t;
  t.log_density = bridge.log_forward(k, from, x);
  t.next = bridge.state(k, x);
  t.reverse_log_density = bridge.log_backward(k, x, from.x);
  return t;
}

Transition diffusion_backward_step(const DiffusionBridge& bridge, std::size_t k,
                                   const BridgeState& from, Stream& rng) {
  Point x(from.x.size());
  bridge.backward_mean(k, from.x, x);
  add_noise(bridge.path(), bridge.alpha(k), rng, x);
  Transition t;
  t.log_density = bridge.log_backward(k, from.x, x);
  t.next = bridge.state(k - 1, x);
  t.reverse_log_density = bridge.log_forward(k, t.next, from.x);
  return t;
}

double diffusion_work(std::span<const Point> points, const DiffusionBridge& bridge) {
  return recompute_work(points, bridge);
}

// ---------------------------------------------------------------------------

AccelCost accel_cost(AcceleratorKind kind, std::size_t steps, bool modeled) {
  switch (kind) {
    case AcceleratorKind::identity:
      if (steps != 0) throw std::invalid_argument("identity requires K = 0");
      return {2, 0};
    case AcceleratorKind::affine_flow:
      if (steps != 1) throw std::invalid_argument("affine_flow requires K = 1");
      return {2, 1};
    case AcceleratorKind::langevin_bridge:
      if (steps == 0) throw std::invalid_argument("langevin_bridge requires K >= 1");
      return {steps + 1, modeled ? steps + 1 : 0};
    case AcceleratorKind::analytic_diffusion:
      if (steps == 0) return {2, modeled ? 2u : 0u};
      return {steps + 1, modeled ? steps + 1 : 0};
  }
  throw std::invalid_argument("unknown accelerator kind");
}

// ---------------------------------------------------------------------------

namespace {

template <class Bridge, class Fwd, class Bwd>
void simulate_bridge(const Bridge& bridge, std::span<const double> x_lo,
                     std::span<const double> x_hi, Stream& rng, PathProposal& out, Fwd fwd,
                     Bwd bwd) {
  const std::size_t K = bridge.steps();
  out.forward_path.resize(K + 1);
  out.backward_path.resize(K + 1);

  BridgeState cur = bridge.state(0, x_lo);
  const double u_start = cur.potential;
  double log_p = 0.0, log_q = 0.0;
  out.forward_path[0] = cur.x;
  for (std::size_t k = 1; k <= K; ++k) {
    Transition t = fwd(bridge, k, cur, rng);
    log_p += t.log_density;
    log_q += t.reverse_log_density;
    cur = std::move(t.next);
    out.forward_path[k] = cur.x;
  }
  out.work_forward = cur.potential - u_start + log_p - log_q;

  cur = bridge.state(K, x_hi);
  const double u_end = cur.potential;
  log_p = log_q = 0.0;
  out.backward_path[K] = cur.x;
  for (std::size_t k = K; k >= 1; --k) {
    Transition t = bwd(bridge, k, cur, rng);
    log_q += t.log_density;
    log_p += t.reverse_log_density;
    cur = std::move(t.next);
    out.backward_path[k - 1] = cur.x;
  }
  out.work_backward = u_end - cur.potential + log_p - log_q;
  out.potential_evals = K + 1;
}

void check_work(double cached, double recomputed, const char* what) {
  if (!std::isfinite(cached) || !std::isfinite(recomputed)) return;
  if (std::abs(cached - recomputed) > 1e-9 * (1.0 + std::abs(cached)))
    throw std::logic_error(std::string(what) + ": cached and recomputed work disagree");
}

void identity_proposal(const AnnealingPath& path, const Schedule& schedule, std::size_t n,
                       std::span<const double> x_lo, std::span<const double> x_hi,
                       PathProposal& out) {
  const double b0 = schedule[n - 1], b1 = schedule[n];
  out.forward_path.assign(1, Point(x_lo.begin(), x_lo.end()));
  out.backward_path.assign(1, Point(x_hi.begin(), x_hi.end()));
  out.work_forward = path.potential_at(b1, x_lo) - path.potential_at(b0, x_lo);
  out.work_backward = path.potential_at(b1, x_hi) - path.potential_at(b0, x_hi);
  out.potential_evals = 2;
}

}  // namespace

PathProposal propose(const Accelerator& acc, const AnnealingPath& path, const Schedule& schedule,
                     std::size_t n, std::span<const double> x_lo, std::span<const double> x_hi,
                     Stream& rng) {
  if (n < 1 || n > schedule.pairs()) throw std::out_of_range("pair index out of range");
  if (x_lo.size() != path.dim() || x_hi.size() != path.dim())
    throw std::invalid_argument("dimension mismatch");

  PathProposal out;
  switch (acc.kind) {
    case AcceleratorKind::identity:
      identity_proposal(path, schedule, n, x_lo, x_hi, out);
      break;

    case AcceleratorKind::affine_flow: {
      const AffineMap& map = acc.flow[n];
      Point x1(x_lo.size()), x0(x_hi.size());
      map.apply(x_lo, x1);
      map.invert(x_hi, x0);
      const double b0 = schedule[n - 1], b1 = schedule[n];
      out.work_forward = path.potential_at(b1, x1) - path.potential_at(b0, x_lo) - map.log_det();
      out.work_backward = path.potential_at(b1, x_hi) - path.potential_at(b0, x0) - map.log_det();
      out.forward_path = {Point(x_lo.begin(), x_lo.end()), std::move(x1)};
      out.backward_path = {std::move(x0), Point(x_hi.begin(), x_hi.end())};
      out.potential_evals = 2;
      out.network_evals = 1;
      if (acc.verify_work) {
        check_work(out.work_forward, flow_work(acc.flow, path, schedule, n, out.forward_path[0]),
                   "affine_flow");
        check_work(out.work_backward,
                   flow_work(acc.flow, path, schedule, n, out.backward_path[0]), "affine_flow");
      }
      break;
    }

    case AcceleratorKind::langevin_bridge: {
      LangevinBridge bridge(path, schedule, n, acc.steps, acc.langevin);
      simulate_bridge(bridge, x_lo, x_hi, rng, out, langevin_forward_step,
                      langevin_backward_step);
      if (acc.langevin.drift_is_model) out.network_evals = acc.steps + 1;
      if (acc.verify_work) {
        check_work(out.work_forward, langevin_work(out.forward_path, bridge), "langevin_bridge");
        check_work(out.work_backward, langevin_work(out.backward_path, bridge),
                   "langevin_bridge");
      }
      break;
    }

    case AcceleratorKind::analytic_diffusion: {
      if (acc.steps == 0) {
        identity_proposal(path, schedule, n, x_lo, x_hi, out);
        break;
      }
      DiffusionBridge bridge(path, schedule, n, acc.steps);
      simulate_bridge(bridge, x_lo, x_hi, rng, out, diffusion_forward_step,
                      diffusion_backward_step);
      if (acc.verify_work) {
        check_work(out.work_forward, diffusion_work(out.forward_path, bridge),
                   "analytic_diffusion");
        check_work(out.work_backward, diffusion_work(out.backward_path, bridge),
                   "analytic_diffusion");
      }
      break;
    }
  }
  return out;
}

}  // namespace apt
