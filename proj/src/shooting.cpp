#include "shapereg/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace shapereg {

void ShootConfig::validate() const {
  if (steps < 1) throw ValidationError("shoot.steps must be >= 1");
  if (!(hamiltonian_tol > 0.0)) throw ValidationError("shoot.hamiltonian_tol must be > 0");
  if (!is_power_of_two(n_g)) throw ValidationError("shoot.n_g must be a power of two");
  metric.validate();
}

double Trajectory::relative_drift() const {
  return std::abs(hamiltonian_end - hamiltonian_start) / std::max(hamiltonian_start, 1e-12);
}

std::vector<double> flatten(const PhaseState& s) {
  std::vector<double> y(4 * s.p.size());
  for (std::size_t i = 0; i < s.p.size(); ++i) {
    y[4 * i + 0] = s.p[i].x;
    y[4 * i + 1] = s.p[i].y;
    y[4 * i + 2] = s.q[i].x;
    y[4 * i + 3] = s.q[i].y;
  }
  return y;
}

PhaseState unflatten(std::span<const double> y) {
  const std::size_t n = y.size() / 4;
  PhaseState s;
  s.p.resize(n);
  std::vector<Vec2> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.p[i] = {y[4 * i + 0], y[4 * i + 1]};
    q[i] = {y[4 * i + 2], y[4 * i + 3]};
  }
  s.q = ClosedCurve2D(std::move(q));
  return s;
}

GeodesicShooter::GeodesicShooter(const ShootConfig& cfg, std::size_t n_particles)
    : cfg_(cfg), n_p_(n_particles) {
  cfg_.validate();
  if (n_p_ < 4) throw InvalidInput("shooting needs at least 4 particles");
  const std::size_t n = cfg_.n_g;
  h_ = kTwoPi / static_cast<double>(n);
  weight_ = 1.0 / (static_cast<double>(n_p_) * h_ * h_);
  metric_symbol_ = metric_inverse_symbol(n, cfg_.metric);
  const auto pre = grid_prefilter_symbol(n);
  velocity_symbol_.resize(n * n);
  for (std::size_t i = 0; i < n * n; ++i) velocity_symbol_[i] = metric_symbol_[i] * pre[i] * pre[i];
  spectral_ = &torus_spectral(n);
}

void GeodesicShooter::check_state(std::span<const double> y) const {
  for (double v : y)
    if (!std::isfinite(v) || std::abs(v) > 1e8) throw BlowUpError("shoot: state left numerical bounds");
}

void GeodesicShooter::rhs(std::span<const double> y, std::span<double> k) const {
  const std::size_t n = cfg_.n_g;
  thread_local std::vector<double> cx, cy;
  thread_local std::vector<grid::PointStencil> st;
  cx.assign(n * n, 0.0);
  cy.assign(n * n, 0.0);
  st.resize(n_p_);
  for (std::size_t i = 0; i < n_p_; ++i) {
    st[i] = grid::point_stencil({y[4 * i + 2], y[4 * i + 3]}, h_, n);
    grid::scatter_value(cx, cy, st[i], n, {weight_ * y[4 * i], weight_ * y[4 * i + 1]});
  }
  spectral_->apply(cx, cy, velocity_symbol_);
  for (std::size_t i = 0; i < n_p_; ++i) {
    const auto jet = grid::eval_jet(cx, cy, st[i], n, false);
    const double px = y[4 * i], py = y[4 * i + 1];
    k[4 * i + 0] = -(px * jet.grad[0][0] + py * jet.grad[1][0]);
    k[4 * i + 1] = -(px * jet.grad[0][1] + py * jet.grad[1][1]);
    k[4 * i + 2] = jet.value.x;
    k[4 * i + 3] = jet.value.y;
  }
}

void GeodesicShooter::rhs_adjoint(std::span<const double> y, std::span<const double> kbar,
                                  std::span<double> ybar) const {
  const std::size_t n = cfg_.n_g;
  thread_local std::vector<double> cx, cy;
  thread_local std::vector<grid::PointStencil> st;
  cx.assign(n * n, 0.0);
  cy.assign(n * n, 0.0);
  st.resize(n_p_);
  for (std::size_t i = 0; i < n_p_; ++i) {
    st[i] = grid::point_stencil({y[4 * i + 2], y[4 * i + 3]}, h_, n);
    grid::scatter_value(cx, cy, st[i], n, {weight_ * y[4 * i], weight_ * y[4 * i + 1]});
  }
  spectral_->apply(cx, cy, velocity_symbol_);

  // Explicit dependence of the stage on (p, q), and the cotangent of the
  // velocity coefficients accumulated on the grid.
  thread_local std::vector<double> gx, gy;
  gx.assign(n * n, 0.0);
  gy.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n_p_; ++i) {
    const auto jet = grid::eval_jet(cx, cy, st[i], n, true);
    const double p[2] = {y[4 * i], y[4 * i + 1]};
    const double b[2] = {kbar[4 * i], kbar[4 * i + 1]};
    const double a[2] = {kbar[4 * i + 2], kbar[4 * i + 3]};
    for (int c = 0; c < 2; ++c) {
      ybar[4 * i + c] = -(b[0] * jet.grad[c][0] + b[1] * jet.grad[c][1]);
      double qb = a[0] * jet.grad[0][c] + a[1] * jet.grad[1][c];
      for (int aa = 0; aa < 2; ++aa)
        for (int cc = 0; cc < 2; ++cc) qb -= b[cc] * p[aa] * jet.hess[aa][cc][c];
      ybar[4 * i + 2 + c] = qb;
    }
    grid::scatter_value(gx, gy, st[i], n, {a[0], a[1]});
    grid::scatter_gradient(gx, gy, st[i], n, {-p[0], -p[1]}, {b[0], b[1]});
  }
  spectral_->apply(gx, gy, velocity_symbol_);

  // Dependence through the spread momentum.
  for (std::size_t i = 0; i < n_p_; ++i) {
    const auto jet = grid::eval_jet(gx, gy, st[i], n, false);
    const double p[2] = {y[4 * i], y[4 * i + 1]};
    ybar[4 * i + 0] += weight_ * jet.value.x;
    ybar[4 * i + 1] += weight_ * jet.value.y;
    for (int c = 0; c < 2; ++c) ybar[4 * i + 2 + c] += weight_ * (p[0] * jet.grad[0][c] + p[1] * jet.grad[1][c]);
  }
}

TorusGridField GeodesicShooter::velocity_field(const PhaseState& state) const {
  if (state.p.size() != state.q.size() || state.p.size() != n_p_) throw ContractViolation("velocity_field: state size mismatch");
  std::vector<Vec2> scaled(state.p.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = weight_ * state.p[i];
  return metric_inverse(spread_to_grid(scaled, state.q.points(), cfg_.n_g), cfg_.metric);
}

double GeodesicShooter::hamiltonian(const PhaseState& state) const {
  const auto y = flatten(state);
  check_state(y);
  std::vector<double> k(y.size());
  rhs(y, k);
  double h = 0.0;
  for (std::size_t i = 0; i < n_p_; ++i) h += y[4 * i] * k[4 * i + 2] + y[4 * i + 1] * k[4 * i + 3];
  return 0.5 * h / static_cast<double>(n_p_);
}

Trajectory GeodesicShooter::shoot(const PhaseState& initial, bool record_stages) const {
  if (initial.p.size() != initial.q.size()) throw ContractViolation("shoot: p and q lengths differ");
  if (initial.p.size() != n_p_) throw ContractViolation("shoot: particle count does not match the shooter");
  const std::size_t dim = 4 * n_p_;
  const double dt = 1.0 / static_cast<double>(cfg_.steps);

  Trajectory traj;
  traj.states.reserve(cfg_.steps + 1);
  traj.states.push_back(initial);
  if (record_stages) traj.stages.resize(cfg_.steps);

  std::vector<double> y = flatten(initial);
  check_state(y);
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  auto hamiltonian_of = [&](const std::vector<double>& state, const std::vector<double>& k) {
    double h = 0.0;
    for (std::size_t i = 0; i < n_p_; ++i) h += state[4 * i] * k[4 * i + 2] + state[4 * i + 1] * k[4 * i + 3];
    return 0.5 * h / static_cast<double>(n_p_);
  };

  for (int step = 0; step < cfg_.steps; ++step) {
    rhs(y, k1);
    if (step == 0) traj.hamiltonian_start = hamiltonian_of(y, k1);
    if (record_stages) traj.stages[step][0] = y;
    for (std::size_t d = 0; d < dim; ++d) tmp[d] = y[d] + 0.5 * dt * k1[d];
    if (record_stages) traj.stages[step][1] = tmp;
    rhs(tmp, k2);
    for (std::size_t d = 0; d < dim; ++d) tmp[d] = y[d] + 0.5 * dt * k2[d];
    if (record_stages) traj.stages[step][2] = tmp;
    rhs(tmp, k3);
    for (std::size_t d = 0; d < dim; ++d) tmp[d] = y[d] + dt * k3[d];
    if (record_stages) traj.stages[step][3] = tmp;
    rhs(tmp, k4);
    for (std::size_t d = 0; d < dim; ++d) y[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    check_state(y);
    try {
      traj.states.push_back(unflatten(y));
    } catch (const InvalidInput& e) {
      throw BlowUpError(std::string("shoot: curve degenerated (") + e.what() + ")");
    }
  }
  rhs(y, k1);
  traj.hamiltonian_end = hamiltonian_of(y, k1);
  if (traj.relative_drift() > cfg_.hamiltonian_tol)
    throw IntegrationAccuracyError("shoot: relative Hamiltonian drift " + std::to_string(traj.relative_drift()) +
                                   " exceeds tolerance; increase the step count");
  return traj;
}

PhaseGradient GeodesicShooter::adjoint(const Trajectory& traj, std::span<const Vec2> cobar_q,
                                       std::span<const Vec2> cobar_p) const {
  if (traj.stages.size() != static_cast<std::size_t>(cfg_.steps))
    throw ContractViolation("shoot_adjoint: trajectory was shot without a stage cache");
  if (cobar_q.size() != n_p_ || (!cobar_p.empty() && cobar_p.size() != n_p_))
    throw ContractViolation("shoot_adjoint: cotangent length mismatch");
  const std::size_t dim = 4 * n_p_;
  const double dt = 1.0 / static_cast<double>(cfg_.steps);

  std::vector<double> lambda(dim, 0.0);
  for (std::size_t i = 0; i < n_p_; ++i) {
    lambda[4 * i + 2] = cobar_q[i].x;
    lambda[4 * i + 3] = cobar_q[i].y;
    if (!cobar_p.empty()) {
      lambda[4 * i + 0] = cobar_p[i].x;
      lambda[4 * i + 1] = cobar_p[i].y;
    }
  }
  std::vector<double> kbar(dim), ybar4(dim), ybar3(dim), ybar2(dim), ybar1(dim);
  for (int step = cfg_.steps - 1; step >= 0; --step) {
    const auto& st = traj.stages[step];
    for (std::size_t d = 0; d < dim; ++d) kbar[d] = dt / 6.0 * lambda[d];
    rhs_adjoint(st[3], kbar, ybar4);
    for (std::size_t d = 0; d < dim; ++d) kbar[d] = dt / 3.0 * lambda[d] + dt * ybar4[d];
    rhs_adjoint(st[2], kbar, ybar3);
    for (std::size_t d = 0; d < dim; ++d) kbar[d] = dt / 3.0 * lambda[d] + 0.5 * dt * ybar3[d];
    rhs_adjoint(st[1], kbar, ybar2);
    for (std::size_t d = 0; d < dim; ++d) kbar[d] = dt / 6.0 * lambda[d] + 0.5 * dt * ybar2[d];
    rhs_adjoint(st[0], kbar, ybar1);
    for (std::size_t d = 0; d < dim; ++d) lambda[d] += ybar1[d] + ybar2[d] + ybar3[d] + ybar4[d];
  }
  PhaseGradient g;
  g.p.resize(n_p_);
  g.q.resize(n_p_);
  for (std::size_t i = 0; i < n_p_; ++i) {
    g.p[i] = {lambda[4 * i], lambda[4 * i + 1]};
    g.q[i] = {lambda[4 * i + 2], lambda[4 * i + 3]};
  }
  return g;
}

// ---------------------------------------------------------------- free functions

std::vector<Vec2> normal_momentum(const ScalarLoopField& p0, const ClosedCurve2D& q0) {
  if (p0.size() != q0.size()) throw ContractViolation("p0 and q0 lengths differ");
  const auto normals = curve_normal(q0);
  std::vector<Vec2> p(q0.size());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = p0[j] * normals[j];
  return p;
}

TorusGridField velocity_field(const PhaseState& state, const ShootConfig& cfg) {
  return GeodesicShooter(cfg, state.p.size()).velocity_field(state);
}

double hamiltonian(const PhaseState& state, const ShootConfig& cfg) {
  return GeodesicShooter(cfg, state.p.size()).hamiltonian(state);
}

Trajectory shoot(const ScalarLoopField& p0, const ClosedCurve2D& q0, const ShootConfig& cfg, bool record_stages) {
  PhaseState init{normal_momentum(p0, q0), q0};
  return GeodesicShooter(cfg, q0.size()).shoot(init, record_stages);
}

PhaseGradient shoot_adjoint(const Trajectory& traj, std::span<const Vec2> cobar_q, const ShootConfig& cfg) {
  if (traj.states.empty()) throw ContractViolation("shoot_adjoint: empty trajectory");
  return GeodesicShooter(cfg, traj.states.front().p.size()).adjoint(traj, cobar_q);
}

}  // namespace shapereg
