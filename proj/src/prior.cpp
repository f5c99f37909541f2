#include "shapereg/prior.hpp"

#include <cmath>

namespace shapereg {

void PriorSpec::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("prior.delta must be > 0");
  if (!(ell > 0.0) || !std::isfinite(ell)) throw ValidationError("prior.ell must be > 0");
  if (!std::isfinite(alpha)) throw ValidationError("prior.alpha must be finite");
}

std::size_t PriorSpec::modes_for(std::size_t n_p) const {
  const std::size_t nyquist = n_p / 2;
  if (n_modes == 0) return nyquist;
  if (n_modes > nyquist)
    throw ValidationError("prior.n_modes " + std::to_string(n_modes) + " exceeds the Nyquist mode " +
                          std::to_string(nyquist));
  return n_modes;
}

double PriorSpec::mode_variance(std::size_t k) const {
  const double kk = static_cast<double>(k);
  return delta * std::pow(1.0 + ell * ell * kk * kk, -alpha);
}

SpectralBasis::SpectralBasis(std::size_t n_p, std::size_t n_modes) : n_p_(n_p), k_max_(n_modes) {
  if (n_p < 4) throw InvalidInput("spectral basis needs at least 4 samples");
  if (n_modes < 1 || 2 * n_modes > n_p) throw InvalidInput("spectral basis: modes must lie in [1, n_p/2]");
  wavenumber_.push_back(0);
  for (std::size_t k = 1; k <= k_max_; ++k) {
    wavenumber_.push_back(k);
    if (2 * k != n_p_) wavenumber_.push_back(k);
  }
  const std::size_t d = dim();
  table_.resize(d * n_p_);
  analysis_scale_.resize(d);
  const double n = static_cast<double>(n_p_);
  for (std::size_t i = 0; i < d; ++i) {
    const double k = static_cast<double>(wavenumber_[i]);
    for (std::size_t j = 0; j < n_p_; ++j) {
      const double s = kTwoPi * static_cast<double>(j) / n;
      table_[i * n_p_ + j] = is_sine(i) ? std::sin(k * s) : std::cos(k * s);
    }
    const bool single = wavenumber_[i] == 0 || 2 * wavenumber_[i] == n_p_;
    analysis_scale_[i] = single ? 1.0 / n : 2.0 / n;
  }
}

std::vector<double> SpectralBasis::synthesize(std::span<const double> coef) const {
  if (coef.size() != dim()) throw ContractViolation("synthesize: coefficient count mismatch");
  std::vector<double> u(n_p_, 0.0);
  for (std::size_t i = 0; i < dim(); ++i) {
    const double c = coef[i];
    if (c == 0.0) continue;
    const double* row = &table_[i * n_p_];
    for (std::size_t j = 0; j < n_p_; ++j) u[j] += c * row[j];
  }
  return u;
}

std::vector<double> SpectralBasis::analyze(std::span<const double> samples) const {
  if (samples.size() != n_p_) throw ContractViolation("analyze: sample count mismatch");
  std::vector<double> c(dim(), 0.0);
  for (std::size_t i = 0; i < dim(); ++i) {
    const double* row = &table_[i * n_p_];
    double acc = 0.0;
    for (std::size_t j = 0; j < n_p_; ++j) acc += row[j] * samples[j];
    c[i] = analysis_scale_[i] * acc;
  }
  return c;
}

std::vector<double> SpectralBasis::synthesize_adjoint(std::span<const double> grad_samples) const {
  if (grad_samples.size() != n_p_) throw ContractViolation("synthesize_adjoint: sample count mismatch");
  std::vector<double> c(dim(), 0.0);
  for (std::size_t i = 0; i < dim(); ++i) {
    const double* row = &table_[i * n_p_];
    double acc = 0.0;
    for (std::size_t j = 0; j < n_p_; ++j) acc += row[j] * grad_samples[j];
    c[i] = acc;
  }
  return c;
}

std::vector<double> SpectralBasis::variances(const PriorSpec& spec) const {
  std::vector<double> v(dim());
  for (std::size_t i = 0; i < dim(); ++i) v[i] = spec.mode_variance(wavenumber_[i]);
  return v;
}

std::vector<double> sample_coefficients(std::span<const double> variances, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> c(variances.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::sqrt(variances[i]) * normal(rng);
  return c;
}

ScalarLoopField sample_prior(const PriorSpec& spec, std::size_t n_p, Rng& rng) {
  spec.validate();
  const SpectralBasis basis(n_p, spec.modes_for(n_p));
  return ScalarLoopField(basis.synthesize(sample_coefficients(basis.variances(spec), rng)));
}

double cameron_martin_norm_coefficients(std::span<const double> coef, const SpectralBasis& basis,
                                        const PriorSpec& spec) {
  if (coef.size() != basis.dim()) throw ContractViolation("cameron_martin_norm: coefficient count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < coef.size(); ++i) acc += coef[i] * coef[i] / spec.mode_variance(basis.wavenumber(i));
  return acc;
}

double cameron_martin_norm(const ScalarLoopField& u, const PriorSpec& spec) {
  spec.validate();
  const SpectralBasis basis(u.size(), spec.modes_for(u.size()));
  return cameron_martin_norm_coefficients(basis.analyze(u.values()), basis, spec);
}

ValidationReport validate_spec(const PriorPair& pair, const MetricSpec& metric) {
  ValidationReport r;
  auto check = [&r](const PriorSpec& s, const std::string& name) {
    if (!(s.delta > 0.0)) r.errors.push_back(name + ".delta must be > 0");
    if (!(s.ell > 0.0)) r.errors.push_back(name + ".ell must be > 0");
  };
  check(pair.momentum, "prior.p0");
  check(pair.reparam, "prior.nu");
  // p0 in L^2 needs alpha1 > 1/2; nu in C^1 needs alpha2 > 3/2.
  if (!(pair.momentum.alpha > 0.5)) r.errors.push_back("prior.p0.alpha must be > 1/2 (p0 regularity)");
  if (!(pair.reparam.alpha > 1.5)) r.errors.push_back("prior.nu.alpha must be > 3/2 (nu regularity)");
  if (!(metric.alpha > 0.0)) r.errors.push_back("metric.alpha must be > 0");
  if (metric.gamma < 2) r.errors.push_back("metric.gamma must be >= 2");
  else if (metric.gamma < 3)
    r.warnings.push_back("metric.gamma < 3: velocity fields are not guaranteed 3-admissible");
  return r;
}

}  // namespace shapereg
