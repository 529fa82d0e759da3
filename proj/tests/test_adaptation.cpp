#include <doctest.h>

#include <cmath>

#include "apt/adaptation.hpp"
#include "apt/errors.hpp"
#include "oracles.hpp"

using namespace apt;

namespace {

AnnealingPath gaussian_path(std::size_t dim, double mean, double sd) {
  TargetSpec s;
  s.name = "gaussian";
  s.dim = dim;
  s.mean = {mean};
  s.stddev = {sd};
  const TargetDensity t = build_target(s);
  return AnnealingPath::linear(standard_reference(t), t);
}

std::vector<Point> normal_draws(std::size_t count, std::size_t dim, double mean, double sd,
                                std::uint64_t seed) {
  Stream rng(seed, 0);
  std::vector<Point> out(count, Point(dim));
  for (Point& p : out)
    for (double& v : p) v = mean + sd * rng.normal();
  return out;
}

double sup_diff(const Schedule& a, const Schedule& b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.chains(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

}  // namespace

TEST_CASE("hand-inverted two-pair example") {
  const Schedule s = tune_schedule(std::vector<double>{0.3, 0.1}, uniform_schedule(2));
  CHECK(s[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(s[0] == 0.0);
  CHECK(s[2] == 1.0);
}

TEST_CASE("uniform rejections are a fixed point") {
  const Schedule in({0.0, 0.1, 0.35, 0.4, 0.8, 1.0});
  const Schedule out = tune_schedule(std::vector<double>(5, 0.2), in);
  for (std::size_t n = 0; n < in.chains(); ++n) CHECK(out[n] == doctest::Approx(in[n]).epsilon(1e-14));
}

TEST_CASE("zero rejections leave the schedule unchanged") {
  const Schedule in({0.0, 0.2, 0.3, 1.0});
  CHECK(tune_schedule(std::vector<double>(3, 0.0), in) == in);
}

TEST_CASE("tuned schedules are always valid") {
  Stream rng(4, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(7);
    for (double& v : r) v = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    const Schedule s = tune_schedule(r, uniform_schedule(7));
    for (std::size_t n = 1; n < s.chains(); ++n) CHECK(s[n] - s[n - 1] >= kScheduleSeparation * 0.5);
    CHECK(s[0] == 0.0);
    CHECK(s[7] == 1.0);
  }
}

TEST_CASE("tuning with exact rejections converges") {
  // pi^b is N(m_b, v_b) on the linear path from N(0,1) to N(mu, sd^2); the
  // identity swap rejection is the product TV distance, by quadrature
  const double mu = 3.0, sd = 0.3;
  auto moments = [&](double b) {
    const double prec = (1 - b) + b / (sd * sd);
    return std::pair{b * mu / (sd * sd) / prec, 1.0 / std::sqrt(prec)};
  };
  Schedule s = uniform_schedule(5);
  std::vector<Schedule> history{s};
  for (int round = 0; round < 10; ++round) {
    std::vector<double> r;
    for (std::size_t n = 1; n <= 5; ++n) {
      const auto [m0, s0] = moments(s[n - 1]);
      const auto [m1, s1] = moments(s[n]);
      r.push_back(oracle::product_tv(m0, s0, m1, s1, 400));
    }
    s = tune_schedule(r, s);
    history.push_back(s);
  }
  CHECK(sup_diff(history[9], history[10]) < 0.01);
  CHECK(sup_diff(history[0], history[1]) > 0.01);
}

TEST_CASE("pilot tuning returns one schedule per round plus the initial one") {
  const AnnealingPath path = gaussian_path(1, 3.0, 0.3);
  TuningSettings settings;
  settings.rounds = 3;
  settings.pilot_iterations = 400;
  settings.pilot_burn_in = 50;
  const auto states =
      run_tuning(path, uniform_schedule(4), Accelerator{}, HmcSettings{0.3, 5, 1}, settings);
  REQUIRE(states.size() == 4);
  CHECK(states[0].schedule == uniform_schedule(4));
  for (std::size_t i = 1; i < states.size(); ++i) {
    CHECK(states[i].round == i);
    CHECK(states[i].rejections.size() == 4);
  }
}

TEST_CASE("flow loss gradient matches finite differences") {
  const AnnealingPath path = gaussian_path(3, 1.0, 0.7);
  const Schedule sched({0.0, 0.4, 1.0});
  const auto lo = normal_draws(64, 3, 0.2, 0.9, 1);
  const auto hi = normal_draws(64, 3, 0.8, 0.8, 2);
  Stream rng(3, 0);
  for (int trial = 0; trial < 10; ++trial) {
    AffineMap map{Point(3), Point(3)};
    for (int i = 0; i < 3; ++i) {
      map.shift[i] = 0.5 * rng.normal();
      map.log_scale[i] = 0.3 * rng.normal();
    }
    Point gs(3), gl(3), tmp(3), tmp2(3);
    flow_loss(map, path, sched, 2, lo, hi, gs, gl);
    for (int i = 0; i < 6; ++i) {
      const double h = 1e-5;
      AffineMap up = map, down = map;
      double& pu = i < 3 ? up.shift[i] : up.log_scale[i - 3];
      double& pd = i < 3 ? down.shift[i] : down.log_scale[i - 3];
      pu += h;
      pd -= h;
      const double fd = (flow_loss(up, path, sched, 2, lo, hi, tmp, tmp2) -
                         flow_loss(down, path, sched, 2, lo, hi, tmp, tmp2)) /
                        (2 * h);
      const double g = i < 3 ? gs[i] : gl[i - 3];
      CHECK(std::abs(g - fd) <= 1e-5 * std::max(1.0, std::abs(g)));
    }
  }
}

TEST_CASE("identity is optimal when the two levels coincide") {
  const AnnealingPath path = gaussian_path(2, 0.0, 1.0);
  const auto pool = normal_draws(2000, 2, 0.0, 1.0, 5);
  FitSettings fs;
  fs.batch = pool.size();
  fs.steps = 300;
  const FitResult r = fit_affine_flows({pool, pool}, path, uniform_schedule(1), fs);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(r.params.maps[0].shift[i]) < 1e-3);
    CHECK(std::abs(r.params.maps[0].log_scale[i]) < 1e-3);
  }
}

TEST_CASE("fitting recovers the exact gaussian transport") {
  const AnnealingPath path = gaussian_path(1, 3.0, 2.0);
  FitSettings fs;
  fs.seed = 3;
  const FitResult r = fit_affine_flows(
      {normal_draws(20000, 1, 0.0, 1.0, 7), normal_draws(20000, 1, 3.0, 2.0, 8)}, path,
      uniform_schedule(1), fs);
  CHECK(std::abs(r.params.maps[0].shift[0] - 3.0) < 0.05);
  CHECK(std::abs(std::exp(r.params.maps[0].log_scale[0]) / 2.0 - 1.0) < 0.02);

  const auto& trace = r.loss_trace[0];
  REQUIRE(trace.size() == fs.steps + 1);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
  CHECK(trace.back() < trace.front());
}

TEST_CASE("a fitted flow lowers rejection on a mixture pair") {
  TargetSpec spec;
  spec.name = "gmm";
  spec.dim = 2;
  const TargetDensity t = build_target(spec);
  const AnnealingPath path = AnnealingPath::linear(standard_reference(t), t);
  const Schedule sched = uniform_schedule(4);
  EngineConfig pt;
  pt.iterations = 12000;
  pt.thin = 2;
  pt.seed = 1;
  pt.hmc = HmcSettings{0.03, 5, 1};
  const RunResult base = run(path, sched, Accelerator{}, pt);

  std::vector<std::vector<Point>> samples;
  for (std::size_t n = 0; n <= 4; ++n) samples.push_back(chain_samples(base.samples, n));
  FitSettings fs;
  fs.seed = 2;
  fs.batch = 256;
  fs.steps = 500;
  const FitResult fit = fit_affine_flows(samples, path, sched, fs);
  Accelerator flow;
  flow.kind = AcceleratorKind::affine_flow;
  flow.steps = 1;
  flow.flow = fit.params;
  pt.seed = 5;
  const RunResult with_flow = run(path, sched, flow, pt);

  // the pair next to the reference has the largest shape change
  const RejectionEstimate a = base.diagnostics.rejections[0];
  const RejectionEstimate b = with_flow.diagnostics.rejections[0];
  CAPTURE(a.rate);
  CAPTURE(b.rate);
  CHECK(a.rate - b.rate > 3 * std::hypot(a.se, b.se));
}

TEST_CASE("diverging scales abort the fit") {
  // the optimal log scale is log 3, above the configured bound
  const AnnealingPath path = gaussian_path(1, 0.0, 3.0);
  FitSettings fs;
  fs.max_log_scale = 0.5;
  fs.batch = 256;
  CHECK_THROWS_AS(fit_affine_flows({normal_draws(256, 1, 0.0, 1.0, 1),
                                    normal_draws(256, 1, 0.0, 3.0, 2)},
                                   path, uniform_schedule(1), fs),
                  FitError);
}

TEST_CASE("too few samples are refused") {
  const AnnealingPath path = gaussian_path(1, 0.0, 1.0);
  FitSettings fs;
  CHECK_THROWS_AS(fit_affine_flows({normal_draws(10, 1, 0, 1, 1), normal_draws(10, 1, 0, 1, 2)},
                                   path, uniform_schedule(1), fs),
                  std::invalid_argument);
}
