#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "shapereg/geometry.hpp"
#include "shapereg/types.hpp"

namespace shapereg {

/// Orientation-preserving circle map sampled at the knots s_j, as a lifted
/// angle (eta(s + 2 pi) = eta(s) + 2 pi) together with its derivative.
struct Reparameterisation {
  std::vector<double> eta;
  std::vector<double> eta_prime;

  static Reparameterisation identity(std::size_t n);
  std::size_t size() const { return eta.size(); }
};

/// Lie exponential with the RK4 stage states kept for the adjoint sweep.
struct LieFlow {
  Reparameterisation map;
  int steps = 0;
  // Per step: four stage states, flat (chi_j, chi'_j) pairs.
  std::vector<std::array<std::vector<double>, 4>> stages;
};

/// Time-1 flow of d chi / dt = nu(chi) from the identity, with the
/// derivative chi' carried along by its variational equation.
Reparameterisation lie_exponential(const ScalarLoopField& nu, int steps);
LieFlow lie_flow(const ScalarLoopField& nu, int steps, bool record_stages);

/// Gradient with respect to the samples of nu of
///   sum_j eta_bar_j eta_j + eta_prime_bar_j eta'_j.
std::vector<double> lie_flow_adjoint(const LieFlow& flow, const ScalarLoopField& nu, std::span<const double> eta_bar,
                                     std::span<const double> eta_prime_bar);

struct LiftedState {
  std::vector<Vec2> p;
  ClosedCurve2D q;
};

/// (p0 n, q1) -> ((p0 n) o eta * eta', q1 o eta), with p0, n and q1 spline
/// evaluated at eta(s_j).
LiftedState cotangent_lift(const ScalarLoopField& p0, const ClosedCurve2D& q1, const Reparameterisation& eta);

/// Forward pass of lie_exponential followed by cotangent_lift, retaining
/// everything reparam_adjoint needs.
struct ReparamForward {
  ScalarLoopField p0;
  ScalarLoopField nu;
  ClosedCurve2D template_curve;
  LieFlow flow;
  LiftedState lifted;
};

ReparamForward reparam_forward(const ScalarLoopField& p0, const ScalarLoopField& nu, const ClosedCurve2D& q1,
                               int lie_steps, bool record_stages = true);

struct ReparamGradient {
  std::vector<double> p0;
  std::vector<double> nu;
};

/// Exact transpose of the linearised lie_exponential + cotangent_lift chain.
ReparamGradient reparam_adjoint(const ReparamForward& fwd, std::span<const Vec2> pbar_cot,
                                std::span<const Vec2> qbar_cot);

}  // namespace shapereg
