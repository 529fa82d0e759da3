#include <doctest.h>

#include <cmath>
#include <memory>

#include "apt/annealing.hpp"
#include "apt/errors.hpp"
#include "oracles.hpp"

using namespace apt;

namespace {

TargetSpec gmm_spec(std::size_t dim, double scale = 40.0, double component_std = 1.0) {
  TargetSpec s;
  s.name = "gmm";
  s.dim = dim;
  s.scale = scale;
  s.component_std = component_std;
  return s;
}

AnnealingPath linear_path(const TargetSpec& spec) {
  const TargetDensity t = build_target(spec);
  return AnnealingPath::linear(standard_reference(t), t);
}

// exp(-int_0^{1-s} du / (2(1-u))) by Simpson on the integrand
double numeric_mean_scale(double s) {
  const double integral =
      oracle::simpson([](double u) { return 1.0 / (2.0 * (1.0 - u)); }, 0.0, 1.0 - s, 2000);
  return std::exp(-integral);
}

double numeric_alpha(double lo, double hi) {
  // noise between reverse times lo < hi is governed by forward times 1-hi .. 1-lo
  const double integral =
      oracle::simpson([](double u) { return 1.0 / (2.0 * (1.0 - u)); }, 1.0 - hi, 1.0 - lo, 2000);
  return 1.0 - std::exp(-2.0 * integral);
}

}  // namespace

TEST_CASE("uniform schedules") {
  CHECK(uniform_schedule(1).betas() == std::vector<double>{0.0, 1.0});
  CHECK(uniform_schedule(2).betas() == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(uniform_schedule(4).betas() == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK_THROWS_AS(uniform_schedule(0), std::invalid_argument);
}

TEST_CASE("schedule validation and text round trip") {
  CHECK_THROWS_AS(Schedule({0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Schedule({0.1, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Schedule({0.0, 0.9}), std::invalid_argument);
  CHECK_THROWS_AS(Schedule({0.0, 0.5, 0.5, 1.0}), std::invalid_argument);
  const Schedule s({0.0, 0.1234567890123456789, 0.7, 1.0});
  CHECK(Schedule::parse(s.serialize()) == s);
  CHECK_THROWS_AS(Schedule::parse("0, x, 1"), std::invalid_argument);
}

TEST_CASE("linear path endpoints") {
  const AnnealingPath path = linear_path(gmm_spec(3));
  Stream rng(5, 0);
  Point x(3);
  double constant = 0.0;
  for (int i = 0; i < 100; ++i) {
    for (double& v : x) v = 2.0 * rng.normal();
    CHECK(path.potential_at(1.0, x) == path.target().potential(x));
    const double diff = path.potential_at(0.0, x) - path.reference().potential(x);
    if (i == 0) constant = diff;
    CHECK(diff == doctest::Approx(constant).epsilon(1e-12));
  }
}

TEST_CASE("linear path interpolates potentials with the reference sign") {
  const AnnealingPath path = linear_path(gmm_spec(2));
  const Point x{0.3, -0.8};
  const double eta = path.reference().potential(x);
  const double u = path.target().potential(x);
  for (double b : {0.0, 0.2, 0.5, 0.9, 1.0})
    CHECK(path.potential_at(b, x) == doctest::Approx((1 - b) * eta + b * u).epsilon(1e-13));
  CHECK_THROWS_AS(path.potential_at(1.5, x), std::domain_error);
  CHECK_THROWS_AS(path.potential_at(-0.1, x), std::domain_error);
}

TEST_CASE("vp path at zero is the standard normal") {
  const AnnealingPath path = AnnealingPath::analytic_vp(build_target(gmm_spec(4)));
  Stream rng(1, 1);
  Point x(4);
  for (int i = 0; i < 20; ++i) {
    for (double& v : x) v = 3.0 * rng.normal();
    double sq = 0.0;
    for (double v : x) sq += v * v;
    CHECK(path.potential_at(0.0, x) ==
          doctest::Approx(0.5 * sq + 2.0 * std::log(2 * oracle::kPi)).epsilon(1e-12));
  }
}

TEST_CASE("vp path on a single component scales the mean") {
  const Point mu{2.0, -1.0, 4.0};
  auto model = std::make_shared<GaussianMixture>(std::vector<Point>{mu}, 1.0);
  const TargetDensity t("single", 3, model, 0.0);
  const AnnealingPath path = AnnealingPath::analytic_vp(t);
  Stream rng(2, 0);
  Point x(3);
  for (int i = 0; i < 20; ++i) {
    for (double& v : x) v = rng.normal();
    double logp = 0.0;
    for (std::size_t j = 0; j < 3; ++j) logp += std::log(oracle::normal_pdf(x[j], 0.5 * mu[j], 1.0));
    CHECK(path.potential_at(0.25, x) == doctest::Approx(-logp).epsilon(1e-12));
  }
}

TEST_CASE("vp path at one is the target") {
  const AnnealingPath path = AnnealingPath::analytic_vp(build_target(gmm_spec(3, 5.0, 0.5)));
  const Point x{0.1, 0.2, -0.3};
  CHECK(path.potential_at(1.0, x) == doctest::Approx(path.target().potential(x)).epsilon(1e-13));
}

TEST_CASE("vp path requires a mixture target") {
  TargetSpec s;
  s.name = "manywell";
  s.dim = 2;
  CHECK_THROWS_AS(AnnealingPath::analytic_vp(build_target(s)), ConfigError);
}

TEST_CASE("vp mean scale") {
  CHECK(vp_mean_scale(1.0) == 1.0);
  CHECK(vp_mean_scale(0.0) == 0.0);
  CHECK(vp_mean_scale(0.49) == doctest::Approx(0.7).epsilon(1e-14));
  for (double s : {0.1, 0.49, 0.8}) CHECK(vp_mean_scale(s) == doctest::Approx(numeric_mean_scale(s)).epsilon(1e-8));
  CHECK_THROWS(vp_mean_scale(1.1));
}

TEST_CASE("vp alpha values and composition") {
  CHECK(vp_alpha(0.5, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(vp_alpha(0.25, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(vp_alpha(0.5, 1.0) == doctest::Approx(numeric_alpha(0.5, 1.0)).epsilon(1e-8));
  CHECK(vp_alpha(0.25, 0.5) == doctest::Approx(numeric_alpha(0.25, 0.5)).epsilon(1e-8));
  CHECK(vp_alpha(0.6 - 1e-9, 0.6) < 1e-8);
  Stream rng(4, 0);
  for (int i = 0; i < 200; ++i) {
    double v[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    std::sort(v, v + 3);
    if (!(v[0] < v[1] && v[1] < v[2])) continue;
    const double lhs = (1 - vp_alpha(v[0], v[1])) * (1 - vp_alpha(v[1], v[2]));
    CHECK(std::abs(lhs - (1 - vp_alpha(v[0], v[2]))) < 1e-12);
  }
  CHECK_THROWS(vp_alpha(0.5, 0.5));
  CHECK_THROWS(vp_alpha(0.0, 0.5));
  CHECK_THROWS(vp_alpha(0.7, 0.5));
}

TEST_CASE("gradients agree with finite differences along both paths") {
  Stream rng(8, 0);
  const AnnealingPath lin = linear_path(gmm_spec(3, 6.0, 1.0));
  const AnnealingPath vp = AnnealingPath::analytic_vp(build_target(gmm_spec(3, 6.0, 0.7)));
  for (const AnnealingPath* path : {&lin, &vp}) {
    for (double b : {0.0, 0.3, 0.75, 1.0}) {
      for (int i = 0; i < 25; ++i) {
        Point x(3);
        for (double& v : x) v = 2.0 * rng.normal();
        Point g(3);
        const double u = path->value_and_gradient_at(b, x, g);
        CHECK(u == doctest::Approx(path->potential_at(b, x)).epsilon(1e-13));
        const auto fd = oracle::fd_gradient(
            [&](std::span<const double> y) { return path->potential_at(b, y); }, x);
        for (std::size_t j = 0; j < 3; ++j)
          CHECK(std::abs(g[j] - fd[j]) <= 1e-4 * std::max(1.0, std::abs(g[j])));
      }
    }
  }
}

TEST_CASE("blend mixes two levels") {
  const AnnealingPath path = linear_path(gmm_spec(2, 4.0));
  const Point x{0.4, 0.1};
  Point g(2), ga(2), gb(2);
  const double v = path.blend(0.2, 0.6, 0.25, x, g);
  const double a = path.value_and_gradient_at(0.2, x, ga);
  const double b = path.value_and_gradient_at(0.6, x, gb);
  CHECK(v == doctest::Approx(0.75 * a + 0.25 * b).epsilon(1e-13));
  for (int j = 0; j < 2; ++j) CHECK(g[j] == doctest::Approx(0.75 * ga[j] + 0.25 * gb[j]));
  CHECK(path.blend(0.2, 0.6, 0.25, x, {}) == doctest::Approx(v).epsilon(1e-15));
}

TEST_CASE("ancestral simulation matches the vp marginal moments") {
  const TargetDensity t = build_target(gmm_spec(2, 8.0, 4.0));
  const GaussianMixture& gmm = *t.mixture();
  const double std = gmm.component_std();
  Stream rng(21, 0);
  const std::size_t n = 40000;
  for (double s : {0.25, 0.5, 0.75}) {
    std::vector<double> xs(n), sq(n);
    Point y(2);
    for (std::size_t i = 0; i < n; ++i) {
      gmm.sample(rng, y);
      xs[i] = std::sqrt(s) * y[0] + std::sqrt(1 - s) * rng.normal();
      sq[i] = xs[i] * xs[i];
    }
    // moments of the closed-form marginal: mixture of N(sqrt(s) mu_k, s std^2 + 1 - s)
    double m1 = 0.0, m2 = 0.0;
    for (const auto& mu : gmm.means()) {
      m1 += std::sqrt(s) * mu[0];
      m2 += s * mu[0] * mu[0] + s * std * std + 1 - s;
    }
    m1 /= gmm.components();
    m2 /= gmm.components();
    CAPTURE(s);
    CHECK(std::abs(oracle::mean(xs) - m1) < 4 * oracle::standard_error(xs));
    CHECK(std::abs(oracle::mean(sq) - m2) < 4 * oracle::standard_error(sq));

    // the path density is normalised
    const AnnealingPath vp = AnnealingPath::analytic_vp(t);
    const double z = oracle::simpson2d(
        [&](double a, double b) {
          const double p[2] = {a, b};
          return std::exp(-vp.potential_at(s, p));
        },
        -10, 10, 800);
    CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
  }
}
