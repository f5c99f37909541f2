#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "shapereg/observation.hpp"
#include "shapereg/prior.hpp"
#include "shapereg/scenarios.hpp"

using namespace shapereg;

namespace {

constexpr double kPi = std::numbers::pi;

struct Draw {
  ScalarLoopField p0;
  ScalarLoopField nu;
};

Draw prior_draw(std::size_t n, Rng& rng) {
  const PriorPair pr;
  return {sample_prior(pr.momentum, n, rng), sample_prior(pr.reparam, n, rng)};
}

// Resamples a field at a new resolution through its own interpolating spline.
ScalarLoopField resample(const ScalarLoopField& f, std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t j = 0; j < n; ++j) s[j] = kTwoPi * j / n;
  return ScalarLoopField(spline_eval_loop(f, s));
}

}  // namespace

TEST_CASE("identity flow observes the template circle") {
  ModelConfig cfg;
  const auto y = observe(ScalarLoopField::zeros(100), ScalarLoopField::zeros(100), template_circle(100), cfg, 4);
  const Vec2 expect[4] = {{1 + kPi, kPi}, {kPi, 1 + kPi}, {kPi - 1, kPi}, {kPi, kPi - 1}};
  for (int i = 0; i < 4; ++i) CHECK(norm(y[i] - expect[i]) < 1e-12);
}

TEST_CASE("a rigid rotation of the parameter re-indexes the observations") {
  ModelConfig cfg;
  const std::size_t n = 100, N = 20, m = 3;
  ObservationModel model(template_circle(n), cfg);
  const auto base = model.observe(ScalarLoopField::zeros(n), ScalarLoopField::zeros(n), N);
  const auto rot = model.observe(ScalarLoopField::zeros(n), ScalarLoopField::constant(n, kTwoPi * m / N), N);
  for (std::size_t i = 0; i < N; ++i) CHECK(norm(rot[i] - base[(i + m) % N]) < 1e-12);
}

TEST_CASE("observations agree with a high-resolution run" * doctest::test_suite("resolution")) {
  Rng rng(32);
  const auto d = prior_draw(100, rng);
  ModelConfig cfg;
  const auto lo = observe(d.p0, d.nu, template_circle(100), cfg, 100);
  const auto hi = observe(resample(d.p0, 1000), resample(d.nu, 1000), template_circle(1000), cfg, 100);
  double err = 0.0;
  for (std::size_t i = 0; i < 100; ++i) err = std::max({err, std::abs(lo[i].x - hi[i].x), std::abs(lo[i].y - hi[i].y)});
  MESSAGE("resolution error " << err);
  CHECK(err < 1e-3);
}

TEST_CASE("potential: exact fit, single offset and recomputation") {
  Rng rng(33);
  const std::size_t n = 64;
  const auto d = prior_draw(n, rng);
  ModelConfig cfg;
  ObservationModel model(template_circle(n), cfg);
  const auto y = model.observe(d.p0, d.nu, 30);
  CHECK(model.potential(d.p0, d.nu, ObservationSet::equispaced(y, 0.01)) == 0.0);

  const double sigma = 0.05;
  ObservationSet one;
  one.s = {1.1};
  const auto g1 = model.observe(d.p0, d.nu, one.s);
  one.y = {g1[0] + Vec2{sigma, 0.0}};
  one.sigma2 = {sigma * sigma};
  CHECK(model.potential(d.p0, d.nu, one) == doctest::Approx(0.5).epsilon(1e-12));

  std::normal_distribution<double> g;
  ObservationSet obs = ObservationSet::equispaced(y, 1.0);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    obs.y[i] += Vec2{0.1 * g(rng), 0.1 * g(rng)};
    obs.sigma2[i] = 0.01 + 0.001 * i;
  }
  double direct = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const Vec2 r = y[i] - obs.y[i];
    direct += 0.5 * dot(r, r) / obs.sigma2[i];
  }
  CHECK(model.potential(d.p0, d.nu, obs) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("potential is invariant under cyclic re-indexing of the data") {
  Rng rng(34);
  const std::size_t n = 64, N = 25;
  const auto d = prior_draw(n, rng);
  ObservationModel model(template_circle(n), ModelConfig{});
  std::normal_distribution<double> g;
  auto obs = ObservationSet::equispaced(model.observe(d.p0, d.nu, N), 0.02);
  for (auto& v : obs.y) v += Vec2{0.1 * g(rng), 0.1 * g(rng)};
  ObservationSet shifted = obs;
  for (std::size_t i = 0; i < N; ++i) {
    shifted.y[i] = obs.y[(i + 7) % N];
    shifted.s[i] = obs.s[(i + 7) % N];
  }
  CHECK(model.potential(d.p0, d.nu, shifted) == doctest::Approx(model.potential(d.p0, d.nu, obs)).epsilon(1e-13));
}

TEST_CASE("forward failures become an infinite potential") {
  const std::size_t n = 64;
  ObservationModel model(template_circle(n), ModelConfig{});
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = 60.0 * std::sin(25.0 * kTwoPi * j / n);
  const auto obs = ObservationSet::equispaced(model.observe(ScalarLoopField::zeros(n), ScalarLoopField::zeros(n), 10), 1.0);
  const auto m = model.misfit(ScalarLoopField::zeros(n), ScalarLoopField(v), obs);
  CHECK_FALSE(m.ok());
  CHECK(std::isinf(m.phi));
  CHECK_THROWS_AS(model.gradient(ScalarLoopField::zeros(n), ScalarLoopField(v), obs), ObservationFailure);
}

TEST_CASE("observation gradient against finite differences") {
  Rng rng(35);
  const std::size_t n = 50;
  const auto d = prior_draw(n, rng);
  ModelConfig cfg;
  cfg.shoot.steps = 20;
  cfg.lie_steps = 20;
  ObservationModel model(template_circle(n), cfg);
  std::normal_distribution<double> g;
  auto obs = ObservationSet::equispaced(model.observe(d.p0, d.nu, 30), 0.01);
  for (auto& v : obs.y) v += Vec2{0.05 * g(rng), 0.05 * g(rng)};
  const auto grad = model.gradient(d.p0, d.nu, obs);
  CHECK(grad.phi == doctest::Approx(model.potential(d.p0, d.nu, obs)).epsilon(1e-13));

  const std::vector<double> pv(d.p0.values().begin(), d.p0.values().end());
  const std::vector<double> nv(d.nu.values().begin(), d.nu.values().end());
  for (int dir = 0; dir < 12; ++dir) {
    std::vector<double> dp(n), dn(n);
    for (auto& v : dp) v = g(rng);
    for (auto& v : dn) v = 0.02 * g(rng);
    const double eps = 1e-5;
    std::vector<double> pp(pv), pm(pv), np(nv), nm(nv);
    for (std::size_t j = 0; j < n; ++j) {
      pp[j] += eps * dp[j];
      pm[j] -= eps * dp[j];
      np[j] += eps * dn[j];
      nm[j] -= eps * dn[j];
    }
    const double fd = (model.potential(ScalarLoopField(pp), ScalarLoopField(np), obs) -
                       model.potential(ScalarLoopField(pm), ScalarLoopField(nm), obs)) /
                      (2.0 * eps);
    double an = 0.0;
    for (std::size_t j = 0; j < n; ++j) an += grad.p0[j] * dp[j] + grad.nu[j] * dn[j];
    CHECK(std::abs(fd - an) <= 1e-5 * std::abs(an));
  }
}

TEST_CASE("gradient vanishes at a perfect fit, including the rotation direction") {
  Rng rng(36);
  const std::size_t n = 60, N = 20;
  const auto p0 = sample_prior(PriorPair{}.momentum, n, rng);
  const auto nu = ScalarLoopField::constant(n, kTwoPi * 2 / N);
  ObservationModel model(template_circle(n), ModelConfig{});
  const auto obs = ObservationSet::equispaced(model.observe(p0, nu, N), 1e-3);
  const auto grad = model.gradient(p0, nu, obs);
  double rot = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    CHECK(std::abs(grad.p0[j]) < 1e-8);
    CHECK(std::abs(grad.nu[j]) < 1e-8);
    rot += grad.nu[j];
  }
  CHECK(std::abs(rot) < 1e-8);
}

TEST_CASE("shape depends on p0 only: two generators trace the same curve") {
  // Same truncated spectral draw at two resolutions; the discrepancy between
  // the curves traced under two generators must shrink at least at second
  // order.
  Rng rng(37);
  const PriorPair pr;
  const SpectralBasis coarse(100, 49);
  const auto cp = sample_coefficients(coarse.variances(pr.momentum), rng);
  const auto cn1 = sample_coefficients(coarse.variances(pr.reparam), rng);
  const auto cn2 = sample_coefficients(coarse.variances(pr.reparam), rng);
  auto discrepancy = [&](std::size_t n) {
    const SpectralBasis b(n, 49);
    ObservationModel model(template_circle(n), ModelConfig{});
    const ScalarLoopField p0(b.synthesize(cp));
    const auto a = model.observe(p0, ScalarLoopField(b.synthesize(cn1)), 2000);
    const auto pts = model.observe(p0, ScalarLoopField(b.synthesize(cn2)), 300);
    double worst = 0.0;
    for (const auto& q : pts) {
      double best = 1e300;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const Vec2 u = a[i], e = a[(i + 1) % a.size()] - a[i];
        const double t = std::clamp(dot(q - u, e) / dot(e, e), 0.0, 1.0);
        best = std::min(best, norm(q - (u + t * e)));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  const double d100 = discrepancy(100), d200 = discrepancy(200);
  MESSAGE("shape discrepancy n_p=100: " << d100 << " n_p=200: " << d200);
  CHECK(d200 < 1e-2);
  CHECK(d100 / d200 >= 3.0);
}

TEST_CASE("observation set validation") {
  ObservationSet bad;
  CHECK_THROWS(bad.validate());
  auto ok = ObservationSet::equispaced(std::vector<Vec2>(3, Vec2{1.0, 1.0}), 0.1);
  CHECK_NOTHROW(ok.validate());
  ok.sigma2[1] = 0.0;
  CHECK_THROWS(ok.validate());
}
