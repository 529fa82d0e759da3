#include "apt/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "apt/errors.hpp"

namespace apt {

Schedule tune_schedule(std::span<const double> rejections, const Schedule& schedule) {
  const std::size_t N = schedule.pairs();
  if (rejections.size() != N) throw std::invalid_argument("one rejection per pair required");
  std::vector<double> cum(N + 1, 0.0);
  for (std::size_t n = 1; n <= N; ++n) cum[n] = cum[n - 1] + std::max(0.0, rejections[n - 1]);
  const double total = cum[N];
  if (!(total > 0.0)) return schedule;

  std::vector<double> betas(N + 1);
  betas[0] = 0.0;
  betas[N] = 1.0;
  std::size_t m = 1;
  for (std::size_t n = 1; n < N; ++n) {
    const double c = total * static_cast<double>(n) / static_cast<double>(N);
    while (m < N && (cum[m] < c || cum[m] == cum[m - 1])) ++m;
    const double rise = cum[m] - cum[m - 1];
    const double frac = rise > 0.0 ? std::clamp((c - cum[m - 1]) / rise, 0.0, 1.0) : 1.0;
    betas[n] = schedule[m - 1] + frac * (schedule[m] - schedule[m - 1]);
  }
  for (std::size_t n = 1; n < N; ++n)
    betas[n] = std::max(betas[n], betas[n - 1] + kScheduleSeparation);
  for (std::size_t n = N - 1; n >= 1; --n)
    betas[n] = std::min(betas[n], betas[n + 1] - kScheduleSeparation);
  return Schedule(std::move(betas));
}

std::vector<TunerState> run_tuning(const AnnealingPath& path, const Schedule& initial,
                                   const Accelerator& acc, const HmcSettings& hmc,
                                   const TuningSettings& settings) {
  std::vector<TunerState> states;
  states.push_back({initial, {}, 0});
  EngineConfig cfg;
  cfg.iterations = settings.pilot_iterations;
  cfg.burn_in = settings.pilot_burn_in;
  cfg.thin = 0;
  cfg.hmc = hmc;
  cfg.workers = settings.workers;
  cfg.keep_records = false;
  for (std::size_t round = 1; round <= settings.rounds; ++round) {
    const Schedule& current = states.back().schedule;
    cfg.seed = settings.seed + round;
    const RunResult pilot = run(path, current, acc, cfg);
    std::vector<double> r;
    for (const auto& e : pilot.diagnostics.rejections) r.push_back(e.rate);
    states.push_back({tune_schedule(r, current), r, round});
  }
  return states;
}

std::vector<Point> chain_samples(const SampleStore& store, std::size_t chain) {
  std::vector<Point> out;
  out.reserve(store.size());
  for (std::size_t s = 0; s < store.size(); ++s) {
    auto v = store.at(s, chain);
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

double flow_loss(const AffineMap& map, const AnnealingPath& path, const Schedule& schedule,
                 std::size_t n, std::span<const Point> lo, std::span<const Point> hi,
                 std::span<double> grad_shift, std::span<double> grad_log_scale) {
  const std::size_t d = path.dim();
  const double b0 = schedule[n - 1], b1 = schedule[n];
  const double log_det = map.log_det();
  std::fill(grad_shift.begin(), grad_shift.end(), 0.0);
  std::fill(grad_log_scale.begin(), grad_log_scale.end(), 0.0);
  Point z(d), g(d);

  double fwd = 0.0;
  for (const Point& x : lo) {
    map.apply(x, z);
    fwd += path.value_and_gradient_at(b1, z, g) - path.potential_at(b0, x) - log_det;
    for (std::size_t i = 0; i < d; ++i) {
      grad_shift[i] += g[i];
      grad_log_scale[i] += g[i] * std::exp(map.log_scale[i]) * x[i] - 1.0;
    }
  }
  const double nlo = static_cast<double>(lo.size());
  for (std::size_t i = 0; i < d; ++i) {
    grad_shift[i] /= nlo;
    grad_log_scale[i] /= nlo;
  }

  double bwd = 0.0;
  Point gs(d, 0.0), gl(d, 0.0);
  for (const Point& y : hi) {
    map.invert(y, z);
    bwd += path.potential_at(b1, y) - path.value_and_gradient_at(b0, z, g) - log_det;
    for (std::size_t i = 0; i < d; ++i) {
      gs[i] -= g[i] * std::exp(-map.log_scale[i]);
      gl[i] += 1.0 - g[i] * z[i];
    }
  }
  const double nhi = static_cast<double>(hi.size());
  for (std::size_t i = 0; i < d; ++i) {
    grad_shift[i] = 0.5 * (grad_shift[i] + gs[i] / nhi);
    grad_log_scale[i] = 0.5 * (grad_log_scale[i] + gl[i] / nhi);
  }
  return 0.5 * (fwd / nlo - bwd / nhi);
}

namespace {

std::vector<Point> draw_batch(const std::vector<Point>& pool, std::size_t batch, Stream& rng) {
  if (batch >= pool.size()) return pool;
  std::vector<Point> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i)
    out.push_back(pool[static_cast<std::size_t>(rng() % pool.size())]);
  return out;
}

}  // namespace

FitResult fit_affine_flows(const std::vector<std::vector<Point>>& samples,
                           const AnnealingPath& path, const Schedule& schedule,
                           const FitSettings& settings) {
  const std::size_t N = schedule.pairs();
  const std::size_t d = path.dim();
  if (samples.size() != N + 1) throw std::invalid_argument("one sample set per chain required");
  for (std::size_t n = 0; n <= N; ++n)
    if (samples[n].size() < settings.batch)
      throw std::invalid_argument("chain " + std::to_string(n) + " has fewer samples than batch");

  FitResult result;
  result.params = AffineFlowParams::identity(N, d);
  result.loss_trace.assign(N, {});

  Executor exec(settings.workers);
  exec.for_each(N, [&](std::size_t j) {
    const std::size_t n = j + 1;
    AffineMap map = result.params.maps[j];
    AffineMap best = map;
    Point gs(d), gl(d), tmp_s(d), tmp_l(d);
    std::vector<double> m1(2 * d, 0.0), m2(2 * d, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    // fixed evaluation batch for the accepted-iterate loss
    Stream eval_rng(settings.seed, streams::kFit + n, 0);
    const auto eval_lo = draw_batch(samples[n - 1], settings.batch, eval_rng);
    const auto eval_hi = draw_batch(samples[n], settings.batch, eval_rng);
    double best_loss = flow_loss(map, path, schedule, n, eval_lo, eval_hi, tmp_s, tmp_l);
    double prev_loss = best_loss;
    std::size_t increases = 0;
    double lr_scale = 1.0;
    auto& trace = result.loss_trace[j];
    trace.push_back(best_loss);

    for (std::size_t step = 1; step <= settings.steps; ++step) {
      Stream rng(settings.seed, streams::kFit + n, step);
      const auto lo = draw_batch(samples[n - 1], settings.batch, rng);
      const auto hi = draw_batch(samples[n], settings.batch, rng);
      flow_loss(map, path, schedule, n, lo, hi, gs, gl);

      const double decay = 1.0 - static_cast<double>(step - 1) / static_cast<double>(settings.steps);
      const double lr = settings.learning_rate * lr_scale * decay;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < 2 * d; ++k) {
        const double g = k < d ? gs[k] : gl[k - d];
        m1[k] = beta1 * m1[k] + (1.0 - beta1) * g;
        m2[k] = beta2 * m2[k] + (1.0 - beta2) * g * g;
        const double delta = lr * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps);
        if (k < d)
          map.shift[k] -= delta;
        else
          map.log_scale[k - d] -= delta;
      }
      for (double v : map.log_scale)
        if (!(std::abs(v) <= settings.max_log_scale))
          throw FitError("pair " + std::to_string(n) + ": log_scale diverged");

      const double loss = flow_loss(map, path, schedule, n, eval_lo, eval_hi, tmp_s, tmp_l);
      if (loss > prev_loss) {
        if (++increases >= settings.patience) {
          lr_scale *= 0.5;
          increases = 0;
        }
      } else {
        increases = 0;
      }
      prev_loss = loss;
      if (loss <= best_loss) {
        best_loss = loss;
        best = map;
      }
      trace.push_back(best_loss);
    }
    result.params.maps[j] = best;
  });
  return result;
}

}  // namespace apt
