#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "shapereg/types.hpp"

namespace shapereg {

using Rng = std::mt19937_64;

/// Gaussian measure N(0, delta (I - ell^2 d^2/ds^2)^(-alpha)) on periodic
/// scalar fields, truncated to Fourier modes k = 0..n_modes.
struct PriorSpec {
  double delta = 1.0;
  double alpha = 1.0;
  double ell = 1.0;
  std::size_t n_modes = 0;  // 0: n_p / 2

  void validate() const;
  std::size_t modes_for(std::size_t n_p) const;
  /// delta (1 + ell^2 k^2)^(-alpha).
  double mode_variance(std::size_t k) const;
};

struct PriorPair {
  PriorSpec momentum{30.0, 0.55, 1.0, 0};
  PriorSpec reparam{0.05, 1.55, 1.0, 0};
};

/// Real Fourier basis on n_p equispaced samples. Coefficients are ordered
/// [a_0, a_1, b_1, ..., a_K, b_K] with u(s) = a_0 + sum a_k cos ks + b_k sin ks;
/// b_K is omitted when 2K = n_p because sin(K s_j) vanishes on the samples.
class SpectralBasis {
 public:
  SpectralBasis(std::size_t n_p, std::size_t n_modes);

  std::size_t samples() const { return n_p_; }
  std::size_t modes() const { return k_max_; }
  std::size_t dim() const { return wavenumber_.size(); }
  /// Wavenumber k of coefficient index i.
  std::size_t wavenumber(std::size_t i) const { return wavenumber_[i]; }
  bool is_sine(std::size_t i) const { return i > 0 && i % 2 == 0; }

  std::vector<double> synthesize(std::span<const double> coef) const;
  /// Least-squares projection onto the retained modes (exact inverse of
  /// synthesize for band-limited input).
  std::vector<double> analyze(std::span<const double> samples) const;
  /// Transpose of synthesize: maps a sample-space cotangent to coefficients.
  std::vector<double> synthesize_adjoint(std::span<const double> grad_samples) const;

  /// Prior variance of each coefficient.
  std::vector<double> variances(const PriorSpec& spec) const;

 private:
  std::size_t n_p_;
  std::size_t k_max_;
  std::vector<std::size_t> wavenumber_;
  std::vector<double> table_;  // dim x n_p basis values
  std::vector<double> analysis_scale_;
};

/// Independent N(0, variance_i) draws.
std::vector<double> sample_coefficients(std::span<const double> variances, Rng& rng);

ScalarLoopField sample_prior(const PriorSpec& spec, std::size_t n_p, Rng& rng);

/// delta^(-1) sum_k |u_k|^2 (1 + ell^2 k^2)^alpha over retained coefficients.
double cameron_martin_norm(const ScalarLoopField& u, const PriorSpec& spec);
double cameron_martin_norm_coefficients(std::span<const double> coef, const SpectralBasis& basis,
                                        const PriorSpec& spec);

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

/// Regularity checks on the prior exponents and the metric order.
ValidationReport validate_spec(const PriorPair& pair, const MetricSpec& metric);

}  // namespace shapereg
