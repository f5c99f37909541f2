#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "shapereg/observation.hpp"
#include "shapereg/prior.hpp"

namespace shapereg {

/// Current chain position, held as spectral coefficients of p0 and nu.
struct ChainState {
  std::vector<double> p0;
  std::vector<double> nu;
  double sigma2 = 1.0;
  double phi = 0.0;          // potential at (p0, nu, sigma2)
  double residual_sq = 0.0;  // unweighted squared residual at (p0, nu)
};

struct ChainRecord {
  std::size_t iteration = 0;
  bool accepted = false;
  double phi = 0.0;
  double sigma2 = 0.0;
  std::vector<double> p0;
  std::vector<double> nu;

  friend bool operator==(const ChainRecord&, const ChainRecord&) = default;
};

struct SamplerConfig {
  double beta = 0.2;
  std::size_t n_iters = 100000;  // total, burn-in included
  std::size_t thinning = 10;
  std::size_t burn_in = 10000;
  bool adapt_beta = true;
  double target_accept = 0.25;
  bool infer_sigma2 = false;
  double ig_a0 = 1e-4;
  double ig_b0 = 1e-4;

  void validate() const;
};

/// Prior variances of the p0 and nu coefficients.
struct CoefficientPrior {
  std::vector<double> p0;
  std::vector<double> nu;
};

/// Potential of a coefficient pair; +inf signals a failed forward map.
using PotentialFn = std::function<Misfit(std::span<const double> p0, std::span<const double> nu)>;

/// Potential over coefficient space for the given model and data.
PotentialFn make_potential(const ObservationModel& model, const SpectralBasis& p0_basis, const SpectralBasis& nu_basis,
                           const ObservationSet& obs);

/// min{1, exp(phi_u - phi_v)}; zero for an infinite phi_v.
double acceptance_probability(double phi_u, double phi_v);

/// Potential used by the chain: the data-weighted misfit, or the shared
/// variance form residual_sq / (2 sigma2) when sigma2 is inferred.
double chain_phi(const Misfit& m, double sigma2, bool infer_sigma2);

/// One pCN move. Returns true on acceptance; state is unchanged otherwise.
bool pcn_step(ChainState& state, double beta, const CoefficientPrior& prior, const PotentialFn& potential,
              const SamplerConfig& cfg, Rng& rng);

/// Draw from InverseGamma(a0 + n_obs, b0 + residual_sq / 2).
double gibbs_sigma2(double residual_sq, std::size_t n_obs, const SamplerConfig& cfg, Rng& rng);

struct ChainResult {
  std::vector<ChainRecord> records;
  ChainState final_state;
  double final_beta = 0.0;
  std::vector<double> beta_trace;   // beta after every burn-in iteration
  std::size_t accepted_burn_in = 0;
  std::size_t accepted_sampling = 0;
  std::size_t sampling_iterations = 0;
  double acceptance_rate() const;  // post burn-in
};

/// Runs cfg.n_iters iterations from `init` (whose phi/residual_sq are
/// recomputed). `on_record` is called with each retained record as it is
/// produced, in addition to it being stored in the result.
ChainResult run_chain(const ChainState& init, const SamplerConfig& cfg, const CoefficientPrior& prior,
                      const PotentialFn& potential, std::size_t n_obs, Rng& rng,
                      const std::function<void(const ChainRecord&)>& on_record = {});

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;

  static Histogram build(std::span<const double> values, std::size_t bins);
  double bin_width() const { return counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size()); }
};

struct ChainSummary {
  std::size_t records = 0;
  double acceptance_rate = 0.0;
  std::vector<double> p0_mode_mean, p0_mode_std, nu_mode_mean, nu_mode_std;
  std::vector<double> p0_point_mean, p0_point_std, nu_point_mean, nu_point_std;
  std::vector<double> p0_mode_ess, nu_mode_ess;
  double sigma2_mean = 0.0;
  double sigma2_ess = 0.0;
  // 5%, 25%, 50%, 75%, 95% quantiles of sigma2.
  std::vector<double> sigma2_quantiles;
  Histogram sigma2_hist;
  std::vector<Histogram> p0_mode_hist, nu_mode_hist;
};

/// Aggregates a record stream. Point statistics are computed on the sample
/// grids of the given bases.
ChainSummary chain_summary(std::span<const ChainRecord> records, const SpectralBasis& p0_basis,
                           const SpectralBasis& nu_basis, std::size_t bins = 40);

/// Effective sample size by Geyer's initial positive sequence estimator.
double effective_sample_size(std::span<const double> x);

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // population (1/n)
double quantile(std::vector<double> x, double q);

}  // namespace shapereg
