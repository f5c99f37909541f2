#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "shapereg/geometry.hpp"
#include "shapereg/types.hpp"

namespace shapereg {

/// Momentum covectors paired with curve points.
///
/// p_i is a momentum density with respect to the normalised curve parameter:
/// the pairing with a velocity field v is (1/n_p) sum_i p_i . v(q_i).
struct PhaseState {
  std::vector<Vec2> p;
  ClosedCurve2D q;
};

struct ShootConfig {
  int steps = 50;
  MetricSpec metric{};
  std::size_t n_g = 64;
  double hamiltonian_tol = 1e-2;

  void validate() const;
};

/// Time history of a shot. `stages` holds the four RK4 stage states of every
/// step (flat layout px, py, qx, qy per particle) when the shot was recorded
/// for an adjoint sweep, and is empty otherwise.
struct Trajectory {
  std::vector<PhaseState> states;
  std::vector<std::array<std::vector<double>, 4>> stages;
  double hamiltonian_start = 0.0;
  double hamiltonian_end = 0.0;

  const PhaseState& final_state() const { return states.back(); }
  double relative_drift() const;
};

/// Gradient of a scalar functional with respect to the initial (p, q).
struct PhaseGradient {
  std::vector<Vec2> p;
  std::vector<Vec2> q;
};

/// Particle-mesh discretisation of the geodesic equations
///   qdot = u(q),  pdot = -(grad u(q))^T p,  u = A^{-1} J(p, q)
/// for a fixed particle count. Holds precomputed spectral symbols; const
/// member functions are safe to call concurrently.
class GeodesicShooter {
 public:
  GeodesicShooter(const ShootConfig& cfg, std::size_t n_particles);

  const ShootConfig& config() const { return cfg_; }
  std::size_t particles() const { return n_p_; }

  // Scale from particle momenta to grid momentum density: 1 / (n_p h^2).
  double momentum_weight() const { return weight_; }

  TorusGridField velocity_field(const PhaseState& state) const;
  double hamiltonian(const PhaseState& state) const;

  Trajectory shoot(const PhaseState& initial, bool record_stages = false) const;

  /// Exact transpose of the linearised discrete flow: given cotangents on the
  /// final (p, q), returns the gradient with respect to the initial (p, q).
  PhaseGradient adjoint(const Trajectory& traj, std::span<const Vec2> cobar_q,
                        std::span<const Vec2> cobar_p = {}) const;

  // Flat-state kernels, exposed for tests. State layout: px, py, qx, qy.
  void rhs(std::span<const double> y, std::span<double> k) const;
  void rhs_adjoint(std::span<const double> y, std::span<const double> kbar, std::span<double> ybar) const;

 private:
  void check_state(std::span<const double> y) const;

  ShootConfig cfg_;
  std::size_t n_p_;
  double h_;
  double weight_;
  std::vector<double> velocity_symbol_;  // P A^{-1} P on raw spread
  std::vector<double> metric_symbol_;
  const TorusSpectral* spectral_;
};

std::vector<double> flatten(const PhaseState& s);
PhaseState unflatten(std::span<const double> y);

// Free-function surface.
TorusGridField velocity_field(const PhaseState& state, const ShootConfig& cfg);
double hamiltonian(const PhaseState& state, const ShootConfig& cfg);
/// Shoots from initial momentum p0 * n (n the outward normal of q0).
Trajectory shoot(const ScalarLoopField& p0, const ClosedCurve2D& q0, const ShootConfig& cfg,
                 bool record_stages = false);
PhaseGradient shoot_adjoint(const Trajectory& traj, std::span<const Vec2> cobar_q, const ShootConfig& cfg);

/// Initial covectors p0_j * n_j.
std::vector<Vec2> normal_momentum(const ScalarLoopField& p0, const ClosedCurve2D& q0);

}  // namespace shapereg
