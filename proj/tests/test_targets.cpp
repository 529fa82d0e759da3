#include <doctest.h>

#include <cmath>

#include "apt/errors.hpp"
#include "apt/random.hpp"
#include "apt/targets.hpp"
#include "oracles.hpp"

using namespace apt;

namespace {

TargetSpec spec_named(const std::string& name, std::size_t dim) {
  TargetSpec s;
  s.name = name;
  s.dim = dim;
  return s;
}

void check_gradient(const TargetDensity& t, std::span<const double> x) {
  const Point g = t.gradient(x);
  const auto fd = oracle::fd_gradient([&](std::span<const double> y) { return t.potential(y); },
                                      Point(x.begin(), x.end()));
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(std::abs(g[i] - fd[i]) <= 1e-4 * std::max(1.0, std::abs(g[i])));
}

}  // namespace

TEST_CASE("gaussian potential and gradient at the origin") {
  for (std::size_t d : {1u, 3u, 7u}) {
    const TargetDensity t = build_target(spec_named("gaussian", d));
    const Point x(d, 0.0);
    CHECK(t.potential(x) == doctest::Approx(0.5 * d * std::log(2 * oracle::kPi)).epsilon(1e-14));
    for (double g : t.gradient(x)) CHECK(g == 0.0);
  }
}

TEST_CASE("manywell vanishes at the origin and matches the hand gradient") {
  const TargetDensity mw = build_target(spec_named("manywell", 32));
  CHECK(mw.potential(Point(32, 0.0)) == 0.0);

  const TargetDensity mw2 = build_target(spec_named("manywell", 2));
  const Point x{1.0, 1.0};
  const Point g = mw2.gradient(x);
  CHECK(g[0] == doctest::Approx(-8.5));
  CHECK(g[1] == doctest::Approx(1.0));
  const auto fd = oracle::fd_gradient([&](std::span<const double> y) { return mw2.potential(y); }, x);
  CHECK(fd[0] == doctest::Approx(-8.5).epsilon(1e-8));
  CHECK(fd[1] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("double well is zero when every pair sits at d0") {
  // a regular tetrahedron of side 4 in three dimensions
  TargetSpec s = spec_named("dw4", 12);
  s.spatial_dim = 3;
  const double a = 4.0;
  const Point x{0, 0, 0, a, 0, 0, a / 2, a * std::sqrt(3.0) / 2, 0,
                a / 2, a * std::sqrt(3.0) / 6, a * std::sqrt(2.0 / 3.0)};
  const TargetDensity t = build_target(s);
  CHECK(std::abs(t.potential(x)) < 1e-12);
}

TEST_CASE("double well matches the pairwise formula") {
  const TargetDensity t = build_target(spec_named("dw4", 8));
  Stream rng(3, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Point x(8);
    for (double& v : x) v = 3.0 * rng.normal();
    double u = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        const double r = std::hypot(x[2 * i] - x[2 * j], x[2 * i + 1] - x[2 * j + 1]) - 4.0;
        u += -4.0 * r * r + 0.9 * r * r * r * r;
      }
    CHECK(t.potential(x) == doctest::Approx(u).epsilon(1e-12));
  }
}

TEST_CASE("gmm matches dense evaluation at the first mean") {
  const TargetDensity t = build_target(spec_named("gmm", 10));
  const GaussianMixture* gmm = t.mixture();
  REQUIRE(gmm != nullptr);
  CHECK(gmm->components() == 40);
  CHECK(gmm->component_std() == doctest::Approx(1.0 / 40.0));
  for (const auto& mu : gmm->means()) {
    CHECK(std::abs(mu[0]) <= 1.0);
    CHECK(std::abs(mu[1]) <= 1.0);
    for (std::size_t i = 2; i < 10; ++i) CHECK(mu[i] == 0.0);
  }
  const Point x = gmm->means().front();
  CHECK(t.potential(x) ==
        doctest::Approx(oracle::dense_mixture_neglog(x, gmm->means(), 1.0 / 40.0)).epsilon(1e-12));
  Stream rng(9, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Point y(10);
    for (double& v : y) v = rng.normal();
    CHECK(t.potential(y) ==
          doctest::Approx(oracle::dense_mixture_neglog(y, gmm->means(), 1.0 / 40.0)).epsilon(1e-12));
  }
}

TEST_CASE("gmm layout is deterministic in the seed") {
  TargetSpec s = spec_named("gmm", 4);
  const auto a = build_target(s).mixture()->means();
  const auto b = build_target(s).mixture()->means();
  CHECK(a == b);
  s.seed = 1;
  CHECK(build_target(s).mixture()->means() != a);
}

TEST_CASE("gradients agree with finite differences for every family") {
  Stream rng(11, 0);
  const std::vector<std::pair<std::string, std::size_t>> families = {
      {"gaussian", 5}, {"gmm", 10}, {"manywell", 32}, {"dw4", 8}};
  for (const auto& [name, dim] : families) {
    TargetSpec s = spec_named(name, dim);
    if (name == "gaussian") {
      s.mean = {0.5};
      s.stddev = {1.5};
    }
    const TargetDensity t = build_target(s);
    const TargetDensity ref = standard_reference(t);
    for (int trial = 0; trial < 100; ++trial) {
      Point x(dim);
      ref.sample(rng, x);
      if (name == "gmm") {
        // stay within a few component widths of a mode so the density is not degenerate
        const auto& mu = t.mixture()->means()[trial % 40];
        for (std::size_t i = 0; i < dim; ++i) x[i] = mu[i] + 0.05 * x[i];
      }
      CAPTURE(name);
      CHECK(std::isfinite(t.potential(x)));
      check_gradient(t, x);
    }
  }
}

TEST_CASE("stored normalisers match quadrature") {
  SUBCASE("gaussian") {
    TargetSpec s = spec_named("gaussian", 1);
    s.mean = {0.3};
    s.stddev = {1.7};
    s.offset = 2.5;
    const TargetDensity t = build_target(s);
    const double z = oracle::simpson(
        [&](double x) { return std::exp(-t.potential(std::span<const double>(&x, 1))); }, -20, 20,
        4000);
    CHECK(std::log(z) == doctest::Approx(*t.log_normalizer()).epsilon(1e-6));
  }
  SUBCASE("gmm in two dimensions") {
    const TargetDensity t = build_target(spec_named("gmm", 2));
    const double z = oracle::simpson2d(
        [&](double a, double b) {
          const double x[2] = {a, b};
          return std::exp(-t.potential(x));
        },
        -1.25, 1.25, 1400);
    CHECK(std::abs(std::log(z) - *t.log_normalizer()) < 1e-6);
  }
  SUBCASE("manywell per factor") {
    auto pair_z = [](int n) {
      return oracle::simpson([](double x) { return std::exp(-x * x * x * x + 6 * x * x + 0.5 * x); },
                             -7, 7, n) *
             std::sqrt(2 * oracle::kPi);
    };
    const double coarse = std::log(pair_z(4000));
    const double fine = std::log(pair_z(8000));
    CHECK(std::abs(coarse - fine) < 1e-8);
    CHECK(ManyWell::log_pair_normalizer() == doctest::Approx(fine).epsilon(1e-10));
    const TargetDensity t = build_target(spec_named("manywell", 32));
    CHECK(*t.log_normalizer() == doctest::Approx(16.0 * fine).epsilon(1e-10));
  }
}

TEST_CASE("evaluation counters are exact") {
  const TargetDensity t = build_target(spec_named("manywell", 4));
  const Point x(4, 0.3);
  Point g(4);
  for (int i = 0; i < 7; ++i) t.potential(x);
  for (int i = 0; i < 5; ++i) t.gradient(x, g);
  for (int i = 0; i < 3; ++i) t.potential_and_gradient(x, g);
  CHECK(t.counts().potential == 10);
  CHECK(t.counts().gradient == 8);
  const TargetDensity copy = t;
  copy.potential(x);
  CHECK(t.counts().potential == 11);
  t.reset_counts();
  CHECK(t.counts().potential == 0);
}

TEST_CASE("builder errors name the field") {
  auto field_of = [](const TargetSpec& s) {
    try {
      build_target(s);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  CHECK(field_of(spec_named("banana", 2)) == "target.name");
  CHECK(field_of(spec_named("gmm", 1)) == "target.dim");
  CHECK(field_of(spec_named("manywell", 5)) == "target.dim");
  TargetSpec s = spec_named("gmm", 2);
  s.scale = 0.0;
  CHECK(field_of(s) == "target.scale");
  s = spec_named("gmm", 2);
  s.component_std = -1.0;
  CHECK(field_of(s) == "target.component_std");
  s = spec_named("gaussian", 2);
  s.stddev = {1.0, 0.0};
  CHECK(field_of(s) == "target.stddev");
}

TEST_CASE("dimension mismatch is rejected") {
  const TargetDensity t = build_target(spec_named("gaussian", 3));
  CHECK_THROWS_AS(t.potential(Point(2, 0.0)), std::invalid_argument);
}

TEST_CASE("reference draws are finite and centred for particle systems") {
  const TargetDensity t = build_target(spec_named("dw4", 8));
  const TargetDensity ref = standard_reference(t);
  Stream rng(1, 2);
  Point x(8);
  for (int i = 0; i < 50; ++i) {
    ref.sample(rng, x);
    CHECK(std::isfinite(t.potential(x)));
    double cx = 0, cy = 0;
    for (int p = 0; p < 4; ++p) cx += x[2 * p], cy += x[2 * p + 1];
    CHECK(std::abs(cx) < 1e-12);
    CHECK(std::abs(cy) < 1e-12);
  }
}
