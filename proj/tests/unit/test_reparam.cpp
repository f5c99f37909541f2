#include <cmath>
#include <random>

#include "doctest.h"
#include "shapereg/prior.hpp"
#include "shapereg/reparam.hpp"
#include "shapereg/scenarios.hpp"
#include "shapereg/shooting.hpp"

using namespace shapereg;

namespace {

ScalarLoopField sampled(std::size_t n, double (*f)(double)) {
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = f(kTwoPi * j / n);
  return ScalarLoopField(v);
}

double lifted_pairing(const LiftedState& s, std::span<const Vec2> a, std::span<const Vec2> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += dot(a[j], s.p[j]) + dot(b[j], s.q[j]);
  return acc;
}

}  // namespace

TEST_CASE("lie exponential of zero and constant generators") {
  const auto id = lie_exponential(ScalarLoopField::zeros(32), 50);
  for (std::size_t j = 0; j < 32; ++j) {
    CHECK(id.eta[j] == doctest::Approx(kTwoPi * j / 32).epsilon(1e-15));
    CHECK(id.eta_prime[j] == 1.0);
  }
  const auto rot = lie_exponential(ScalarLoopField::constant(32, 0.7), 50);
  for (std::size_t j = 0; j < 32; ++j) {
    CHECK(std::abs(rot.eta[j] - (kTwoPi * j / 32 + 0.7)) < 1e-13);
    CHECK(std::abs(rot.eta_prime[j] - 1.0) < 1e-13);
  }
}

TEST_CASE("lie exponential converges to a fine-step reference") {
  const auto nu = sampled(100, [](double s) { return 0.1 * std::sin(s); });
  const auto coarse = lie_exponential(nu, 50);
  const auto ref = lie_exponential(nu, 1000);
  for (std::size_t j = 0; j < 100; ++j) {
    CHECK(std::abs(coarse.eta[j] - ref.eta[j]) < 1e-8);
    CHECK(std::abs(coarse.eta_prime[j] - ref.eta_prime[j]) < 1e-8);
  }
}

TEST_CASE("lie exponential output is an orientation-preserving circle map") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto nu = sample_prior(PriorPair{}.reparam, 100, rng);
    const auto eta = lie_exponential(nu, 50);
    for (std::size_t j = 0; j < 100; ++j) {
      CHECK(eta.eta_prime[j] > 0.0);
      if (j > 0) CHECK(eta.eta[j] > eta.eta[j - 1]);
    }
    CHECK(eta.eta[99] < eta.eta[0] + kTwoPi);
  }
}

TEST_CASE("too rough a generator is rejected") {
  std::vector<double> v(64);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = 40.0 * std::sin(20.0 * kTwoPi * j / 64);
  CHECK_THROWS_AS(lie_exponential(ScalarLoopField(v), 4), NonDiffeomorphismError);
}

TEST_CASE("flow semigroup: exp(nu) = exp(nu/2) o exp(nu/2)") {
  const std::size_t n = 200;
  const auto nu = sampled(n, [](double s) { return 0.3 * std::sin(s) + 0.2 * std::cos(2.0 * s); });
  const auto half = sampled(n, [](double s) { return 0.15 * std::sin(s) + 0.1 * std::cos(2.0 * s); });
  const auto full = lie_exponential(nu, 200);
  const auto h = lie_exponential(half, 200);
  // eta_half(x) = x + d(x) with d periodic.
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) d[j] = h.eta[j] - kTwoPi * j / n;
  const auto dd = spline_eval_loop(ScalarLoopField(d), std::vector<double>(h.eta.begin(), h.eta.end()));
  for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(h.eta[j] + dd[j] - full.eta[j]) < 1e-6);
}

TEST_CASE("cotangent lift: identity and one-sample rotation") {
  const std::size_t n = 48;
  Rng rng(22);
  const auto p0 = sample_prior(PriorPair{}.momentum, n, rng);
  std::vector<Vec2> pts(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double s = kTwoPi * j / n;
    pts[j] = {3.0 + std::cos(s) + 0.2 * std::cos(3 * s), 3.0 + 0.8 * std::sin(s)};
  }
  const ClosedCurve2D q1(pts);
  const auto pn = normal_momentum(p0, q1);

  const auto same = cotangent_lift(p0, q1, Reparameterisation::identity(n));
  for (std::size_t j = 0; j < n; ++j) {
    CHECK(norm(same.q[j] - q1[j]) < 1e-13);
    CHECK(norm(same.p[j] - pn[j]) < 1e-12 * (1.0 + norm(pn[j])));
  }

  const auto shift = lie_exponential(ScalarLoopField::constant(n, kTwoPi / n), 50);
  const auto rot = cotangent_lift(p0, q1, shift);
  for (std::size_t j = 0; j < n; ++j) {
    CHECK(norm(rot.q[j] - q1[(j + 1) % n]) < 1e-12);
    CHECK(norm(rot.p[j] - pn[(j + 1) % n]) < 1e-11 * (1.0 + norm(pn[j])));
  }
}

TEST_CASE("reparam adjoint against finite differences") {
  const std::size_t n = 40;
  Rng rng(23);
  const auto p0 = sample_prior(PriorPair{}.momentum, n, rng);
  const auto nu = sample_prior(PriorPair{}.reparam, n, rng);
  const auto circle = template_circle(n);
  std::normal_distribution<double> g;
  std::vector<Vec2> a(n), b(n);
  for (auto& v : a) v = {g(rng), g(rng)};
  for (auto& v : b) v = {g(rng), g(rng)};

  const auto fwd = reparam_forward(p0, nu, circle, 30);
  const auto grad = reparam_adjoint(fwd, a, b);
  auto functional = [&](const std::vector<double>& pv, const std::vector<double>& nv) {
    const auto f = reparam_forward(ScalarLoopField(pv), ScalarLoopField(nv), circle, 30, false);
    return lifted_pairing(f.lifted, a, b);
  };
  const std::vector<double> pv(p0.values().begin(), p0.values().end());
  const std::vector<double> nv(nu.values().begin(), nu.values().end());

  for (int dir = 0; dir < 12; ++dir) {
    std::vector<double> dn(n);
    for (auto& v : dn) v = 0.05 * g(rng);
    const double eps = 1e-5;
    std::vector<double> np(nv), nm(nv);
    for (std::size_t j = 0; j < n; ++j) {
      np[j] += eps * dn[j];
      nm[j] -= eps * dn[j];
    }
    const double fd = (functional(pv, np) - functional(pv, nm)) / (2.0 * eps);
    double an = 0.0;
    for (std::size_t j = 0; j < n; ++j) an += grad.nu[j] * dn[j];
    CHECK(std::abs(fd - an) <= 1e-5 * std::abs(an));
  }
  for (int dir = 0; dir < 6; ++dir) {
    std::vector<double> dp(n);
    for (auto& v : dp) v = g(rng);
    const double eps = 1e-4;
    std::vector<double> pp(pv), pm(pv);
    for (std::size_t j = 0; j < n; ++j) {
      pp[j] += eps * dp[j];
      pm[j] -= eps * dp[j];
    }
    const double fd = (functional(pp, nv) - functional(pm, nv)) / (2.0 * eps);
    double an = 0.0;
    for (std::size_t j = 0; j < n; ++j) an += grad.p0[j] * dp[j];
    CHECK(std::abs(fd - an) <= 1e-6 * std::abs(an));
  }

  const auto zero = reparam_adjoint(fwd, std::vector<Vec2>(n), std::vector<Vec2>(n));
  for (double v : zero.p0) CHECK(v == 0.0);
  for (double v : zero.nu) CHECK(v == 0.0);
}

TEST_CASE("reparam adjoint needs the recorded flow") {
  const auto circle = template_circle(16);
  const auto fwd = reparam_forward(ScalarLoopField::constant(16, 1.0), ScalarLoopField::constant(16, 0.1), circle, 10,
                                   false);
  CHECK_THROWS_AS(reparam_adjoint(fwd, std::vector<Vec2>(16), std::vector<Vec2>(16)), ContractViolation);
}
