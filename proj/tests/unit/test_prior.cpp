#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "shapereg/prior.hpp"

using namespace shapereg;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

ScalarLoopField cosine(std::size_t n, double a, double k) {
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = a * std::cos(k * kTwoPi * j / n);
  return ScalarLoopField(v);
}

}  // namespace

TEST_CASE("spectral basis: ordering, round trip and adjoint") {
  const SpectralBasis even(16, 8);
  CHECK(even.dim() == 16u);  // Nyquist sine dropped
  CHECK(even.wavenumber(0) == 0u);
  CHECK(even.wavenumber(1) == 1u);
  CHECK_FALSE(even.is_sine(1));
  CHECK(even.is_sine(2));
  CHECK(even.wavenumber(15) == 8u);
  const SpectralBasis part(16, 5);
  CHECK(part.dim() == 11u);

  Rng rng(41);
  std::normal_distribution<double> g;
  std::vector<double> c(even.dim());
  for (auto& v : c) v = g(rng);
  const auto back = even.analyze(even.synthesize(c));
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(back[i] - c[i]) < 1e-13);

  std::vector<double> w(16);
  for (auto& v : w) v = g(rng);
  const auto s = even.synthesize(c);
  const auto at = even.synthesize_adjoint(w);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t j = 0; j < 16; ++j) lhs += s[j] * w[j];
  for (std::size_t i = 0; i < c.size(); ++i) rhs += c[i] * at[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("cameron-martin norm of single modes, zero and scaling") {
  const PriorSpec spec{30.0, 0.55, 1.0, 0};
  CHECK(cameron_martin_norm(ScalarLoopField::zeros(64), spec) == 0.0);
  for (double k : {0.0, 1.0, 3.0, 17.0}) {
    const double a = 0.7;
    const double expect = a * a * std::pow(1.0 + k * k, 0.55) / 30.0;
    CHECK(cameron_martin_norm(cosine(64, a, k), spec) == doctest::Approx(expect).epsilon(1e-12));
  }
  Rng rng(42);
  const auto u = sample_prior(spec, 64, rng);
  std::vector<double> u3(u.values().begin(), u.values().end());
  for (auto& v : u3) v *= 3.0;
  CHECK(cameron_martin_norm(ScalarLoopField(u3), spec) ==
        doctest::Approx(9.0 * cameron_martin_norm(u, spec)).epsilon(1e-12));
}

TEST_CASE("prior samples: tiny amplitude and very smooth limits") {
  Rng rng(43);
  const auto tiny = sample_prior(PriorSpec{1e-300, 1.0, 1.0, 0}, 32, rng);
  for (double v : tiny.values()) CHECK(std::abs(v) < 1e-140);
  const auto smooth = sample_prior(PriorSpec{1.0, 60.0, 1.0, 0}, 32, rng);
  const auto [lo, hi] = std::minmax_element(smooth.values().begin(), smooth.values().end());
  CHECK(*hi - *lo < 1e-6);
}

TEST_CASE("prior samples: per-mode moments and whitening") {
  const std::size_t n = 32, draws = 10000;
  const PriorSpec spec{2.0, 1.3, 0.8, 0};
  const SpectralBasis basis(n, spec.modes_for(n));
  const auto var = basis.variances(spec);
  for (std::size_t i = 0; i < var.size(); ++i)
    CHECK(var[i] == doctest::Approx(2.0 * std::pow(1.0 + 0.64 * basis.wavenumber(i) * basis.wavenumber(i), -1.3)));

  Rng rng(44);
  std::vector<double> sum(basis.dim(), 0.0), sumsq(basis.dim(), 0.0), pooled;
  pooled.reserve(draws * basis.dim());
  for (std::size_t d = 0; d < draws; ++d) {
    const auto u = sample_prior(spec, n, rng);
    const auto c = basis.analyze(u.values());
    for (std::size_t i = 0; i < c.size(); ++i) {
      sum[i] += c[i];
      sumsq[i] += c[i] * c[i];
      pooled.push_back(c[i] / std::sqrt(var[i]));
    }
  }
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const double m = sum[i] / draws;
    const double v = sumsq[i] / draws - m * m;
    CHECK(std::abs(m) < 5.0 * std::sqrt(var[i] / draws));
    CHECK(std::abs(v - var[i]) < 5.0 * var[i] * std::sqrt(2.0 / draws));
  }
  // Kolmogorov-Smirnov distance of the whitened coefficients from N(0,1);
  // 1.63 / sqrt(n) is the 1% critical value.
  std::sort(pooled.begin(), pooled.end());
  double dmax = 0.0;
  const double m = static_cast<double>(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    const double f = normal_cdf(pooled[i]);
    dmax = std::max({dmax, (i + 1) / m - f, f - i / m});
  }
  CHECK(dmax < 1.63 / std::sqrt(m));
}

TEST_CASE("cameron-martin norm of samples has mean equal to the dimension") {
  const PriorSpec spec{1.0, 0.0, 1.0, 0};
  Rng rng(45);
  const std::size_t n = 24, draws = 4000;
  double acc = 0.0;
  for (std::size_t d = 0; d < draws; ++d) acc += cameron_martin_norm(sample_prior(spec, n, rng), spec);
  const double dim = static_cast<double>(SpectralBasis(n, n / 2).dim());
  // chi-square with dim degrees of freedom: sd sqrt(2 dim).
  CHECK(std::abs(acc / draws - dim) < 4.0 * std::sqrt(2.0 * dim / draws));
}

TEST_CASE("regularity validation") {
  const MetricSpec metric{};
  const auto defaults = validate_spec(PriorPair{}, metric);
  CHECK(defaults.ok());
  REQUIRE(defaults.warnings.size() == 1u);  // gamma = 2 < 3
  CHECK(defaults.warnings[0].find("gamma") != std::string::npos);
  CHECK(validate_spec(PriorPair{}, MetricSpec{0.4, 3}).warnings.empty());

  PriorPair rough_nu;
  rough_nu.reparam.alpha = 1.0;
  const auto r1 = validate_spec(rough_nu, metric);
  CHECK_FALSE(r1.ok());
  CHECK(r1.errors[0].find("alpha") != std::string::npos);

  PriorPair rough_p0;
  rough_p0.momentum.alpha = 0.4;
  CHECK_FALSE(validate_spec(rough_p0, metric).ok());

  PriorPair bad_delta;
  bad_delta.momentum.delta = 0.0;
  CHECK_FALSE(validate_spec(bad_delta, metric).ok());
}
