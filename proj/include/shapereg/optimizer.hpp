#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shapereg/inference.hpp"
#include "shapereg/observation.hpp"
#include "shapereg/prior.hpp"

namespace shapereg {

struct OptimizerConfig {
  std::size_t max_iters = 500;
  double grad_tol = 1e-6;
  double step_tol = 1e-12;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  std::size_t max_line_search = 40;

  void validate() const;
};

/// Value and gradient at x. A non-finite value marks a point outside the
/// domain; the gradient is then ignored.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Data of one accepted line-search step, kept so the Wolfe conditions can
/// be checked after the fact.
struct LineSearchStep {
  double alpha = 0.0;
  double f0 = 0.0;
  double f1 = 0.0;
  double slope0 = 0.0;  // grad(x0) . d
  double slope1 = 0.0;  // grad(x1) . d
};

struct BfgsResult {
  std::vector<double> x;
  std::vector<double> grad;
  double value = 0.0;
  double initial_value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool degraded = false;
  std::string reason;
  std::vector<double> history;  // objective after each accepted iterate
  std::vector<LineSearchStep> steps;
};

/// Dense BFGS on the inverse Hessian with a strong-Wolfe line search.
BfgsResult bfgs_minimize(const Objective& f, std::vector<double> x0, const OptimizerConfig& opt);

/// Regularised misfit L = Phi + (||p0||^2_CM + ||nu||^2_CM) / 2 on spectral
/// coefficients. Gradients are written when the spans are non-empty.
double map_objective(const ObservationModel& model, const SpectralBasis& p0_basis, const SpectralBasis& nu_basis,
                     const ObservationSet& obs, const CoefficientPrior& prior, std::span<const double> p0,
                     std::span<const double> nu, std::span<double> grad_p0 = {}, std::span<double> grad_nu = {});

struct MapEstimate {
  std::vector<double> p0;
  std::vector<double> nu;
  double value = 0.0;
  double initial_value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool degraded = false;
  std::string reason;
};

/// Minimises map_objective with BFGS in whitened coordinates
/// z = coefficient / prior std, where the penalty is |z|^2 / 2.
MapEstimate map_estimate(const ObservationModel& model, const SpectralBasis& p0_basis, const SpectralBasis& nu_basis,
                         const ObservationSet& obs, const CoefficientPrior& prior, std::span<const double> p0_init,
                         std::span<const double> nu_init, const OptimizerConfig& opt);

}  // namespace shapereg
