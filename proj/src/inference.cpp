#include "shapereg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shapereg {

void SamplerConfig::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("sampler.beta must lie in (0, 1]");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw ValidationError("sampler.target_accept must lie in (0, 1)");
  if (thinning < 1) throw ValidationError("sampler.thinning must be >= 1");
  if (burn_in > n_iters) throw ValidationError("sampler.burn_in must not exceed sampler.n_iters");
  if (!(ig_a0 > 0.0) || !(ig_b0 > 0.0)) throw ValidationError("sampler.ig_a0 and sampler.ig_b0 must be > 0");
}

PotentialFn make_potential(const ObservationModel& model, const SpectralBasis& p0_basis, const SpectralBasis& nu_basis,
                           const ObservationSet& obs) {
  if (p0_basis.samples() != model.particles() || nu_basis.samples() != model.particles())
    throw ContractViolation("make_potential: basis resolution does not match the model");
  return [&model, &p0_basis, &nu_basis, &obs](std::span<const double> p0, std::span<const double> nu) {
    return model.misfit(ScalarLoopField(p0_basis.synthesize(p0)), ScalarLoopField(nu_basis.synthesize(nu)), obs);
  };
}

double acceptance_probability(double phi_u, double phi_v) {
  if (!std::isfinite(phi_v)) return 0.0;
  if (!std::isfinite(phi_u)) return 1.0;
  const double d = phi_u - phi_v;
  return d >= 0.0 ? 1.0 : std::exp(d);
}

double chain_phi(const Misfit& m, double sigma2, bool infer_sigma2) {
  if (!m.ok()) return std::numeric_limits<double>::infinity();
  return infer_sigma2 ? 0.5 * m.residual_sq / sigma2 : m.phi;
}

bool pcn_step(ChainState& state, double beta, const CoefficientPrior& prior, const PotentialFn& potential,
              const SamplerConfig& cfg, Rng& rng) {
  const double rho = std::sqrt(std::max(0.0, 1.0 - beta * beta));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> vp(state.p0.size()), vn(state.nu.size());
  for (std::size_t i = 0; i < vp.size(); ++i) vp[i] = rho * state.p0[i] + beta * std::sqrt(prior.p0[i]) * normal(rng);
  for (std::size_t i = 0; i < vn.size(); ++i) vn[i] = rho * state.nu[i] + beta * std::sqrt(prior.nu[i]) * normal(rng);
  const Misfit m = potential(vp, vn);
  const double phi_v = chain_phi(m, state.sigma2, cfg.infer_sigma2);
  const double a = acceptance_probability(state.phi, phi_v);
  // Always consume one uniform so the stream does not depend on the outcome.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < a) {
    state.p0 = std::move(vp);
    state.nu = std::move(vn);
    state.phi = phi_v;
    state.residual_sq = m.residual_sq;
    return true;
  }
  return false;
}

double gibbs_sigma2(double residual_sq, std::size_t n_obs, const SamplerConfig& cfg, Rng& rng) {
  if (!(residual_sq >= 0.0)) throw ContractViolation("gibbs_sigma2: residual_sq must be >= 0");
  // N points carry 2N scalar residuals: shape a0 + 2N/2.
  const double shape = cfg.ig_a0 + static_cast<double>(n_obs);
  const double rate = cfg.ig_b0 + 0.5 * residual_sq;
  std::gamma_distribution<double> gamma(shape, 1.0 / rate);
  double g = gamma(rng);
  while (!(g > 0.0)) g = gamma(rng);
  return 1.0 / g;
}

double ChainResult::acceptance_rate() const {
  return sampling_iterations == 0 ? 0.0
                                  : static_cast<double>(accepted_sampling) / static_cast<double>(sampling_iterations);
}

ChainResult run_chain(const ChainState& init, const SamplerConfig& cfg, const CoefficientPrior& prior,
                      const PotentialFn& potential, std::size_t n_obs, Rng& rng,
                      const std::function<void(const ChainRecord&)>& on_record) {
  cfg.validate();
  if (init.p0.size() != prior.p0.size() || init.nu.size() != prior.nu.size())
    throw ContractViolation("run_chain: state and prior dimensions differ");
  if (cfg.infer_sigma2 && !(init.sigma2 > 0.0)) throw ContractViolation("run_chain: initial sigma2 must be > 0");

  ChainResult out;
  ChainState state = init;
  {
    const Misfit m = potential(state.p0, state.nu);
    state.residual_sq = m.residual_sq;
    state.phi = chain_phi(m, state.sigma2, cfg.infer_sigma2);
  }
  double log_beta = std::log(cfg.beta);
  double beta = cfg.beta;
  for (std::size_t it = 0; it < cfg.n_iters; ++it) {
    const bool burning = it < cfg.burn_in;
    const bool accepted = pcn_step(state, beta, prior, potential, cfg, rng);
    if (cfg.infer_sigma2 && std::isfinite(state.residual_sq)) {
      state.sigma2 = gibbs_sigma2(state.residual_sq, n_obs, cfg, rng);
      state.phi = 0.5 * state.residual_sq / state.sigma2;
    }
    if (burning) {
      out.accepted_burn_in += accepted;
      if (cfg.adapt_beta) {
        // Robbins-Monro on log beta with step (t+1)^-0.6.
        const double gain = std::pow(static_cast<double>(it) + 1.0, -0.6);
        log_beta += gain * ((accepted ? 1.0 : 0.0) - cfg.target_accept);
        log_beta = std::clamp(log_beta, std::log(1e-4), 0.0);
        beta = std::exp(log_beta);
      }
      out.beta_trace.push_back(beta);
      continue;
    }
    out.accepted_sampling += accepted;
    ++out.sampling_iterations;
    if ((it - cfg.burn_in) % cfg.thinning == 0) {
      ChainRecord r{it, accepted, state.phi, state.sigma2, state.p0, state.nu};
      if (on_record) on_record(r);
      out.records.push_back(std::move(r));
    }
  }
  out.final_state = std::move(state);
  out.final_beta = beta;
  return out;
}

Histogram Histogram::build(std::span<const double> values, std::size_t bins) {
  Histogram h;
  if (bins == 0) throw ContractViolation("histogram: bins must be >= 1");
  h.counts.assign(bins, 0);
  if (values.empty()) return h;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  h.lo = *mn;
  h.hi = *mx;
  if (h.hi <= h.lo) {
    // Degenerate range: one unit-width window centred on the value.
    h.lo -= 0.5;
    h.hi += 0.5;
  }
  const double w = (h.hi - h.lo) / static_cast<double>(bins);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - h.lo) / w);
    if (b >= bins) b = bins - 1;
    ++h.counts[b];
  }
  return h;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw ContractViolation("quantile: empty input");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return x[lo] + f * (x[hi] - x[lo]);
}

double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return static_cast<double>(n);
  const double m = mean(x);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - m) * (x[i + lag] - m);
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return 1.0;
  // Sum of consecutive autocovariance pairs while positive and nonincreasing.
  double tau = -g0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = autocov(2 * k) + autocov(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    tau += 2.0 * pair;
  }
  return std::max(1.0, static_cast<double>(n) * g0 / tau);
}

namespace {

void coordinate_stats(std::span<const ChainRecord> records, bool p0, std::size_t dim, std::size_t bins,
                      std::vector<double>& mu, std::vector<double>& sd, std::vector<double>& ess,
                      std::vector<Histogram>& hist) {
  mu.assign(dim, 0.0);
  sd.assign(dim, 0.0);
  ess.assign(dim, 0.0);
  hist.clear();
  std::vector<double> col(records.size());
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t r = 0; r < records.size(); ++r) col[r] = p0 ? records[r].p0[i] : records[r].nu[i];
    mu[i] = mean(col);
    sd[i] = std::sqrt(variance(col));
    ess[i] = effective_sample_size(col);
    hist.push_back(Histogram::build(col, bins));
  }
}

void point_stats(std::span<const ChainRecord> records, bool p0, const SpectralBasis& basis, std::vector<double>& mu,
                 std::vector<double>& sd) {
  const std::size_t n = basis.samples();
  mu.assign(n, 0.0);
  sd.assign(n, 0.0);
  std::vector<double> sum2(n, 0.0);
  for (const auto& r : records) {
    const auto u = basis.synthesize(p0 ? r.p0 : r.nu);
    for (std::size_t j = 0; j < n; ++j) {
      mu[j] += u[j];
      sum2[j] += u[j] * u[j];
    }
  }
  const double c = static_cast<double>(records.size());
  for (std::size_t j = 0; j < n; ++j) {
    mu[j] /= c;
    sd[j] = std::sqrt(std::max(0.0, sum2[j] / c - mu[j] * mu[j]));
  }
}

}  // namespace

ChainSummary chain_summary(std::span<const ChainRecord> records, const SpectralBasis& p0_basis,
                           const SpectralBasis& nu_basis, std::size_t bins) {
  if (records.empty()) throw ContractViolation("chain_summary: empty record stream");
  for (const auto& r : records)
    if (r.p0.size() != p0_basis.dim() || r.nu.size() != nu_basis.dim())
      throw ContractViolation("chain_summary: record dimension does not match the basis");
  ChainSummary s;
  s.records = records.size();
  std::size_t acc = 0;
  std::vector<double> sig(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    acc += records[r].accepted;
    sig[r] = records[r].sigma2;
  }
  s.acceptance_rate = static_cast<double>(acc) / static_cast<double>(records.size());
  coordinate_stats(records, true, p0_basis.dim(), bins, s.p0_mode_mean, s.p0_mode_std, s.p0_mode_ess, s.p0_mode_hist);
  coordinate_stats(records, false, nu_basis.dim(), bins, s.nu_mode_mean, s.nu_mode_std, s.nu_mode_ess, s.nu_mode_hist);
  point_stats(records, true, p0_basis, s.p0_point_mean, s.p0_point_std);
  point_stats(records, false, nu_basis, s.nu_point_mean, s.nu_point_std);
  s.sigma2_mean = mean(sig);
  s.sigma2_ess = effective_sample_size(sig);
  for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) s.sigma2_quantiles.push_back(quantile(sig, q));
  s.sigma2_hist = Histogram::build(sig, bins);
  return s;
}

}  // namespace shapereg
