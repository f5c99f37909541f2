#include <cmath>
#include <random>

#include "doctest.h"
#include "shapereg/diagnostics.hpp"
#include "shapereg/inference.hpp"

using namespace shapereg;

namespace {

CoefficientPrior small_prior() {
  const PriorPair pr;
  const SpectralBasis b(16, 8);
  return {b.variances(pr.momentum), b.variances(pr.reparam)};
}

PotentialFn zero_potential() {
  return [](std::span<const double>, std::span<const double>) { return Misfit{0.0, 0.0}; };
}

// A toy likelihood: noisy observation of the first p0 coefficient.
PotentialFn toy_potential() {
  return [](std::span<const double> p0, std::span<const double> nu) {
    const double r = p0[0] - 1.0, s = nu[1] - 0.1;
    const double rsq = r * r + s * s;
    return Misfit{0.5 * rsq / 0.04, rsq};
  };
}

ChainState zero_state(const CoefficientPrior& prior) {
  ChainState s;
  s.p0.assign(prior.p0.size(), 0.0);
  s.nu.assign(prior.nu.size(), 0.0);
  return s;
}

ChainRecord record(std::size_t it, std::vector<double> p0, std::vector<double> nu, double sigma2 = 1.0) {
  return {it, true, 0.0, sigma2, std::move(p0), std::move(nu)};
}

}  // namespace

TEST_CASE("acceptance probability") {
  CHECK(acceptance_probability(3.0, 3.0) == 1.0);
  CHECK(acceptance_probability(3.0, 3.0 + std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(acceptance_probability(3.0, 1.0) == 1.0);
  CHECK(acceptance_probability(3.0, INFINITY) == 0.0);
}

TEST_CASE("beta = 1 proposes an exact prior draw independent of the state") {
  const auto prior = small_prior();
  SamplerConfig cfg;
  auto a = zero_state(prior);
  auto b = zero_state(prior);
  for (auto& v : b.p0) v = 5.0;
  for (auto& v : b.nu) v = -3.0;
  Rng r1(51), r2(51);
  CHECK(pcn_step(a, 1.0, prior, zero_potential(), cfg, r1));
  CHECK(pcn_step(b, 1.0, prior, zero_potential(), cfg, r2));
  CHECK(a.p0 == b.p0);
  CHECK(a.nu == b.nu);
}

TEST_CASE("infinite potential proposals are rejected") {
  const auto prior = small_prior();
  auto s = zero_state(prior);
  const auto before = s.p0;
  Rng rng(52);
  PotentialFn fail = [](std::span<const double>, std::span<const double>) {
    return Misfit{INFINITY, INFINITY};
  };
  for (int i = 0; i < 20; ++i) CHECK_FALSE(pcn_step(s, 0.3, prior, fail, SamplerConfig{}, rng));
  CHECK(s.p0 == before);
}

TEST_CASE("inverse-gamma variance update") {
  SamplerConfig cfg;
  Rng rng(53);
  const std::size_t N = 10, draws = 100000;
  const double r2 = 2.0;
  const double shape = cfg.ig_a0 + N, scale = cfg.ig_b0 + 0.5 * r2;
  const double mean_exact = scale / (shape - 1.0);
  const double sd_exact = mean_exact / std::sqrt(shape - 2.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < draws; ++i) acc += gibbs_sigma2(r2, N, cfg, rng);
  CHECK(std::abs(acc / draws - mean_exact) < 3.0 * sd_exact / std::sqrt(static_cast<double>(draws)));

  CHECK_THROWS_AS(gibbs_sigma2(-1.0, N, cfg, rng), ContractViolation);

  // Zero residual with a vague prior: the draw collapses towards zero.
  CHECK(gibbs_sigma2(0.0, 50, cfg, rng) < 1e-4);

  // Many observations at a known variance: the update concentrates on it.
  std::normal_distribution<double> g(0.0, 0.1);
  const std::size_t big = 5000;
  double rsq = 0.0;
  for (std::size_t i = 0; i < 2 * big; ++i) {
    const double e = g(rng);
    rsq += e * e;
  }
  for (int i = 0; i < 10; ++i) CHECK(gibbs_sigma2(rsq, big, cfg, rng) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("chains are reproducible and keep records after burn-in only") {
  const auto prior = small_prior();
  SamplerConfig cfg;
  cfg.n_iters = 600;
  cfg.burn_in = 100;
  cfg.thinning = 7;
  cfg.infer_sigma2 = true;
  auto init = zero_state(prior);
  init.sigma2 = 0.1;
  Rng r1(54), r2(54);
  const auto a = run_chain(init, cfg, prior, toy_potential(), 1, r1);
  const auto b = run_chain(init, cfg, prior, toy_potential(), 1, r2);
  CHECK(a.records == b.records);
  REQUIRE(!a.records.empty());
  CHECK(a.records.front().iteration == 100u);
  CHECK(a.records.size() == 72u);  // ceil(500 / 7)
  for (std::size_t i = 1; i < a.records.size(); ++i) CHECK(a.records[i].iteration - a.records[i - 1].iteration == 7u);
  CHECK(a.sampling_iterations == 500u);
  CHECK(a.beta_trace.size() == 100u);
  CHECK(a.final_beta == a.beta_trace.back());
}

TEST_CASE("step size adaptation moves towards the target rate") {
  const auto prior = small_prior();
  SamplerConfig cfg;
  cfg.beta = 1.0;
  cfg.n_iters = 4000;
  cfg.burn_in = 3000;
  cfg.thinning = 1;
  PotentialFn sharp = [](std::span<const double> p0, std::span<const double>) {
    return Misfit{0.5 * (p0[0] - 1.0) * (p0[0] - 1.0) / 1e-4, 0.0};
  };
  Rng rng(55);
  const auto res = run_chain(zero_state(prior), cfg, prior, sharp, 1, rng);
  CHECK(res.final_beta < 0.5);
  CHECK(res.acceptance_rate() > 0.1);
  CHECK(res.acceptance_rate() < 0.5);
}

TEST_CASE("zero potential: every proposal is accepted") {
  const auto prior = small_prior();
  SamplerConfig cfg;
  cfg.n_iters = 2000;
  cfg.burn_in = 0;
  cfg.adapt_beta = false;
  Rng rng(56);
  const auto res = run_chain(zero_state(prior), cfg, prior, zero_potential(), 1, rng);
  CHECK(res.accepted_sampling == 2000u);
  CHECK(res.acceptance_rate() == 1.0);
}

TEST_CASE("effective sample size") {
  CHECK(effective_sample_size(std::vector<double>(100, 2.0)) == 1.0);
  Rng rng(57);
  std::normal_distribution<double> g;
  std::vector<double> iid(4000);
  for (auto& v : iid) v = g(rng);
  CHECK(effective_sample_size(iid) == doctest::Approx(4000.0).epsilon(0.2));
  // AR(1) with rho = 0.9: ESS about n (1 - rho) / (1 + rho).
  std::vector<double> ar(20000);
  double x = 0.0;
  for (auto& v : ar) v = x = 0.9 * x + std::sqrt(1.0 - 0.81) * g(rng);
  CHECK(effective_sample_size(ar) == doctest::Approx(20000.0 * 0.1 / 1.9).epsilon(0.25));
}

TEST_CASE("chain summary") {
  const SpectralBasis b(8, 4);
  std::vector<ChainRecord> constant(10, record(0, std::vector<double>(8, 1.5), std::vector<double>(8, -0.5)));
  const auto cs = chain_summary(constant, b, b);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(cs.p0_mode_std[i] == 0.0);
    CHECK(cs.p0_mode_ess[i] == 1.0);
    CHECK(cs.p0_mode_mean[i] == 1.5);
  }
  std::vector<ChainRecord> two{record(0, std::vector<double>(8, 1.0), std::vector<double>(8, 0.0), 1.0),
                               record(1, std::vector<double>(8, 3.0), std::vector<double>(8, 2.0), 3.0)};
  const auto ts = chain_summary(two, b, b);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(ts.p0_mode_mean[i] == 2.0);
    CHECK(ts.nu_mode_mean[i] == 1.0);
  }
  CHECK(ts.sigma2_mean == 2.0);
  CHECK(ts.sigma2_quantiles.size() == 5u);
  CHECK_THROWS_AS(chain_summary(std::vector<ChainRecord>{}, b, b), ContractViolation);
}

TEST_CASE("histograms") {
  const std::vector<double> v{0.0, 0.1, 0.5, 0.9, 1.0};
  const auto h = Histogram::build(v, 4);
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  CHECK(total == v.size());
  CHECK(h.lo == 0.0);
  CHECK(h.hi == 1.0);
  CHECK(h.counts.front() == 2u);
  CHECK(h.counts.back() == 2u);
}

TEST_CASE("dip statistic") {
  const std::size_t n = 200;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i);
  CHECK(dip_statistic(grid) == doctest::Approx(1.0 / (2.0 * n)).epsilon(1e-9));

  std::vector<double> two;
  for (std::size_t i = 0; i < 100; ++i) {
    two.push_back(i * 1e-3);
    two.push_back(10.0 + i * 1e-3);
  }
  CHECK(dip_statistic(two) == doctest::Approx(0.25).epsilon(0.02));

  Rng rng(58);
  std::normal_distribution<double> g;
  std::vector<double> normal(300);
  for (auto& v : normal) v = g(rng);
  CHECK(dip_test(normal).p_value > 0.05);
  std::vector<double> bimodal(300);
  for (std::size_t i = 0; i < bimodal.size(); ++i) bimodal[i] = g(rng) + (i % 2 ? 4.0 : -4.0);
  CHECK(dip_test(bimodal).p_value < 0.01);
}

TEST_CASE("thinning by effective sample size") {
  std::vector<double> x(100);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  CHECK(thin_by_ess(x, 100.0).size() == 100u);
  CHECK(thin_by_ess(x, 10.0).size() == 10u);
  CHECK(thin_by_ess(x, 30.0).size() == 25u);  // stride ceil(100 / 30) = 4
}
