#include "shapereg/reparam.hpp"

#include <cmath>
#include <string>

namespace shapereg {

Reparameterisation Reparameterisation::identity(std::size_t n) {
  Reparameterisation r;
  r.eta.resize(n);
  r.eta_prime.assign(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) r.eta[j] = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
  return r;
}

namespace {

void lie_rhs(const LoopSpline& nu, std::span<const double> y, std::span<double> k) {
  const std::size_t n = y.size() / 2;
  for (std::size_t j = 0; j < n; ++j) {
    const auto s = nu.sample(y[2 * j]);
    k[2 * j] = s.value;
    k[2 * j + 1] = s.d1 * y[2 * j + 1];
  }
}

// Transpose of the stage Jacobian; parameter cotangents land in coeff_bar.
void lie_rhs_adjoint(const LoopSpline& nu, std::span<const double> y, std::span<const double> kbar,
                     std::span<double> ybar, std::span<double> coeff_bar) {
  const std::size_t n = y.size() / 2;
  const std::size_t m = nu.size();
  for (std::size_t j = 0; j < n; ++j) {
    const auto st = nu.stencil(y[2 * j]);
    double v1 = 0.0, v2 = 0.0;
    for (int a = 0; a < 4; ++a) {
      const double c = nu.coefficients()[st.node(a, m)];
      v1 += c * st.dw[a];
      v2 += c * st.d2w[a];
    }
    const double abar = kbar[2 * j], bbar = kbar[2 * j + 1], xi = y[2 * j + 1];
    ybar[2 * j] = abar * v1 + bbar * v2 * xi;
    ybar[2 * j + 1] = bbar * v1;
    for (int a = 0; a < 4; ++a) coeff_bar[st.node(a, m)] += abar * st.w[a] + bbar * xi * st.dw[a];
  }
}

void check_diffeomorphism(const Reparameterisation& r) {
  const std::size_t n = r.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(r.eta[j]) || !std::isfinite(r.eta_prime[j]))
      throw NonDiffeomorphismError("lie_exponential: non-finite reparameterisation");
    if (r.eta_prime[j] <= 0.0)
      throw NonDiffeomorphismError("lie_exponential: eta' <= 0 at sample " + std::to_string(j));
    const double next = j + 1 < n ? r.eta[j + 1] : r.eta[0] + kTwoPi;
    if (!(next > r.eta[j])) throw NonDiffeomorphismError("lie_exponential: eta is not monotone at sample " + std::to_string(j));
  }
}

}  // namespace

LieFlow lie_flow(const ScalarLoopField& nu, int steps, bool record_stages) {
  if (steps < 1) throw ValidationError("lie_exponential: steps must be >= 1");
  const std::size_t n = nu.size();
  const LoopSpline spline(nu.values());
  const double dt = 1.0 / static_cast<double>(steps);
  const std::size_t dim = 2 * n;

  LieFlow flow;
  flow.steps = steps;
  if (record_stages) flow.stages.resize(steps);
  std::vector<double> y(dim);
  for (std::size_t j = 0; j < n; ++j) {
    y[2 * j] = nu.knot(j);
    y[2 * j + 1] = 1.0;
  }
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  for (int step = 0; step < steps; ++step) {
    if (record_stages) flow.stages[step][0] = y;
    lie_rhs(spline, y, k1);
    for (std::size_t d = 0; d < dim; ++d) tmp[d] = y[d] + 0.5 * dt * k1[d];
    if (record_stages) flow.stages[step][1] = tmp;
    lie_rhs(spline, tmp, k2);
    for (std::size_t d = 0; d < dim; ++d) tmp[d] = y[d] + 0.5 * dt * k2[d];
    if (record_stages) flow.stages[step][2] = tmp;
    lie_rhs(spline, tmp, k3);
    for (std::size_t d = 0; d < dim; ++d) tmp[d] = y[d] + dt * k3[d];
    if (record_stages) flow.stages[step][3] = tmp;
    lie_rhs(spline, tmp, k4);
    for (std::size_t d = 0; d < dim; ++d) y[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
  }
  flow.map.eta.resize(n);
  flow.map.eta_prime.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    flow.map.eta[j] = y[2 * j];
    flow.map.eta_prime[j] = y[2 * j + 1];
  }
  check_diffeomorphism(flow.map);
  return flow;
}

Reparameterisation lie_exponential(const ScalarLoopField& nu, int steps) { return lie_flow(nu, steps, false).map; }

std::vector<double> lie_flow_adjoint(const LieFlow& flow, const ScalarLoopField& nu, std::span<const double> eta_bar,
                                     std::span<const double> eta_prime_bar) {
  const std::size_t n = nu.size();
  if (flow.stages.size() != static_cast<std::size_t>(flow.steps))
    throw ContractViolation("lie_flow_adjoint: flow was computed without a stage cache");
  if (eta_bar.size() != n || eta_prime_bar.size() != n) throw ContractViolation("lie_flow_adjoint: cotangent length mismatch");
  const LoopSpline spline(nu.values());
  const double dt = 1.0 / static_cast<double>(flow.steps);
  const std::size_t dim = 2 * n;

  std::vector<double> lambda(dim);
  for (std::size_t j = 0; j < n; ++j) {
    lambda[2 * j] = eta_bar[j];
    lambda[2 * j + 1] = eta_prime_bar[j];
  }
  std::vector<double> coeff_bar(n, 0.0);
  std::vector<double> kbar(dim), y4(dim), y3(dim), y2(dim), y1(dim);
  for (int step = flow.steps - 1; step >= 0; --step) {
    const auto& st = flow.stages[step];
    for (std::size_t d = 0; d < dim; ++d) kbar[d] = dt / 6.0 * lambda[d];
    lie_rhs_adjoint(spline, st[3], kbar, y4, coeff_bar);
    for (std::size_t d = 0; d < dim; ++d) kbar[d] = dt / 3.0 * lambda[d] + dt * y4[d];
    lie_rhs_adjoint(spline, st[2], kbar, y3, coeff_bar);
    for (std::size_t d = 0; d < dim; ++d) kbar[d] = dt / 3.0 * lambda[d] + 0.5 * dt * y3[d];
    lie_rhs_adjoint(spline, st[1], kbar, y2, coeff_bar);
    for (std::size_t d = 0; d < dim; ++d) kbar[d] = dt / 6.0 * lambda[d] + 0.5 * dt * y2[d];
    lie_rhs_adjoint(spline, st[0], kbar, y1, coeff_bar);
    for (std::size_t d = 0; d < dim; ++d) lambda[d] += y1[d] + y2[d] + y3[d] + y4[d];
  }
  return loop_prefilter(coeff_bar);
}

LiftedState cotangent_lift(const ScalarLoopField& p0, const ClosedCurve2D& q1, const Reparameterisation& eta) {
  const std::size_t n = q1.size();
  if (p0.size() != n || eta.size() != n || eta.eta_prime.size() != n)
    throw ContractViolation("cotangent_lift: resolution mismatch");
  const LoopSpline pspline(p0.values());
  const CurveSpline qspline(q1);
  LiftedState out;
  out.p.resize(n);
  std::vector<Vec2> q(n);
  for (std::size_t j = 0; j < n; ++j) {
    Vec2 pos, t, t2;
    qspline.sample(eta.eta[j], pos, t, t2);
    if (norm(t) < 1e-12) throw DegenerateCurve("cotangent_lift: vanishing template tangent");
    q[j] = pos;
    out.p[j] = (pspline.value(eta.eta[j]) * eta.eta_prime[j]) * normal_from_tangent(t);
  }
  out.q = ClosedCurve2D(std::move(q));
  return out;
}

ReparamForward reparam_forward(const ScalarLoopField& p0, const ScalarLoopField& nu, const ClosedCurve2D& q1,
                               int lie_steps, bool record_stages) {
  if (p0.size() != q1.size() || nu.size() != q1.size()) throw ContractViolation("reparam_forward: resolution mismatch");
  ReparamForward f{p0, nu, q1, lie_flow(nu, lie_steps, record_stages), {}};
  f.lifted = cotangent_lift(p0, q1, f.flow.map);
  return f;
}

ReparamGradient reparam_adjoint(const ReparamForward& fwd, std::span<const Vec2> pbar_cot,
                                std::span<const Vec2> qbar_cot) {
  const std::size_t n = fwd.template_curve.size();
  if (pbar_cot.size() != n || qbar_cot.size() != n) throw ContractViolation("reparam_adjoint: cotangent length mismatch");
  const LoopSpline pspline(fwd.p0.values());
  const CurveSpline qspline(fwd.template_curve);
  const auto& eta = fwd.flow.map;

  std::vector<double> eta_bar(n), xi_bar(n), p0_coeff_bar(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    Vec2 pos, t, t2;
    qspline.sample(eta.eta[j], pos, t, t2);
    const double len = norm(t);
    const Vec2 nrm = normal_from_tangent(t);
    // d/d(sigma) of the normalised rotated tangent.
    const Vec2 dt_perp = (1.0 / len) * t2 - (dot(t, t2) / (len * len * len)) * t;
    const Vec2 dn{dt_perp.y, -dt_perp.x};
    const auto st = pspline.stencil(eta.eta[j]);
    double pv = 0.0, pd = 0.0;
    for (int a = 0; a < 4; ++a) {
      const double c = pspline.coefficients()[st.node(a, n)];
      pv += c * st.w[a];
      pd += c * st.dw[a];
    }
    const double xi = eta.eta_prime[j];
    const double pn = dot(pbar_cot[j], nrm);
    eta_bar[j] = dot(qbar_cot[j], t) + xi * (pd * pn + pv * dot(pbar_cot[j], dn));
    xi_bar[j] = pv * pn;
    for (int a = 0; a < 4; ++a) p0_coeff_bar[st.node(a, n)] += xi * pn * st.w[a];
  }
  ReparamGradient g;
  g.p0 = loop_prefilter(p0_coeff_bar);
  g.nu = lie_flow_adjoint(fwd.flow, fwd.nu, eta_bar, xi_bar);
  return g;
}

}  // namespace shapereg
