#pragma once

#include <cstddef>
#include <vector>

#include "shapereg/reparam.hpp"
#include "shapereg/shooting.hpp"
#include "shapereg/types.hpp"

namespace shapereg {

/// Observed points y_i at curve parameters s_i with per-point noise variances.
struct ObservationSet {
  std::vector<Vec2> y;
  std::vector<double> s;
  std::vector<double> sigma2;

  std::size_t size() const { return y.size(); }
  void validate() const;

  /// Equispaced parameters s_i = 2 pi i / N.
  static std::vector<double> equispaced(std::size_t n);
  /// Equispaced points with a shared variance.
  static ObservationSet equispaced(std::vector<Vec2> y, double sigma2);
};

struct ModelConfig {
  ShootConfig shoot{};
  int lie_steps = 50;

  void validate() const;
};

/// Unweighted and weighted misfit of one forward evaluation.
struct Misfit {
  double phi = 0.0;          // 1/2 sum |G_i - y_i|^2 / sigma2_i; +inf on failure
  double residual_sq = 0.0;  // sum |G_i - y_i|^2; +inf on failure
  bool ok() const;
};

struct ObservationGradient {
  double phi = 0.0;
  std::vector<double> p0;
  std::vector<double> nu;
};

/// G(p0, nu): reparameterise (p0 n, q1) by exp(nu), shoot to time 1, evaluate
/// the spline of q(1) at the observation parameters. Holds the shooter for a
/// fixed particle count; const members are safe to call concurrently.
class ObservationModel {
 public:
  ObservationModel(ClosedCurve2D template_curve, const ModelConfig& cfg);

  const ClosedCurve2D& template_curve() const { return template_; }
  const ModelConfig& config() const { return cfg_; }
  std::size_t particles() const { return template_.size(); }
  const GeodesicShooter& shooter() const { return shooter_; }

  /// Time-1 curve at the particle knots. Throws NumericalFailure subclasses.
  ClosedCurve2D final_curve(const ScalarLoopField& p0, const ScalarLoopField& nu) const;
  /// Same shape computed by shooting first and reparameterising afterwards.
  ClosedCurve2D final_curve_shoot_first(const ScalarLoopField& p0, const ScalarLoopField& nu) const;

  /// Spline of the time-1 curve at the given parameters. Failures of the
  /// forward map are rethrown as ObservationFailure.
  std::vector<Vec2> observe(const ScalarLoopField& p0, const ScalarLoopField& nu, std::span<const double> s) const;
  std::vector<Vec2> observe(const ScalarLoopField& p0, const ScalarLoopField& nu, std::size_t n_obs) const;

  /// Never throws for numerical failures; they produce an infinite misfit.
  Misfit misfit(const ScalarLoopField& p0, const ScalarLoopField& nu, const ObservationSet& obs) const;
  double potential(const ScalarLoopField& p0, const ScalarLoopField& nu, const ObservationSet& obs) const;

  /// Exact gradient of the potential with respect to the samples of p0 and nu.
  /// Throws ObservationFailure when the forward map fails.
  ObservationGradient gradient(const ScalarLoopField& p0, const ScalarLoopField& nu, const ObservationSet& obs) const;

 private:
  ClosedCurve2D template_;
  ModelConfig cfg_;
  GeodesicShooter shooter_;
};

// Free-function surface.
std::vector<Vec2> observe(const ScalarLoopField& p0, const ScalarLoopField& nu, const ClosedCurve2D& template_curve,
                          const ModelConfig& cfg, std::size_t n_obs);
double potential(const ScalarLoopField& p0, const ScalarLoopField& nu, const ObservationSet& obs,
                 const ClosedCurve2D& template_curve, const ModelConfig& cfg);
ObservationGradient observe_gradient(const ScalarLoopField& p0, const ScalarLoopField& nu, const ObservationSet& obs,
                                     const ClosedCurve2D& template_curve, const ModelConfig& cfg);

/// Spline evaluation of a closed curve at arbitrary parameters.
std::vector<Vec2> spline_eval_curve(const ClosedCurve2D& q, std::span<const double> s);

}  // namespace shapereg
