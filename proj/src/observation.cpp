#include "shapereg/observation.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace shapereg {

void ObservationSet::validate() const {
  if (y.empty()) throw ValidationError("observations: need at least one point");
  if (s.size() != y.size()) throw ValidationError("observations: s has " + std::to_string(s.size()) + " entries for " +
                                                  std::to_string(y.size()) + " points");
  if (sigma2.size() != y.size())
    throw ValidationError("observations: sigma2 has " + std::to_string(sigma2.size()) + " entries for " +
                          std::to_string(y.size()) + " points");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!is_finite(y[i]) || !std::isfinite(s[i])) throw ValidationError("observations: non-finite entry at " + std::to_string(i));
    if (!(sigma2[i] > 0.0) || !std::isfinite(sigma2[i]))
      throw ValidationError("observations: sigma2 must be > 0 at " + std::to_string(i));
  }
}

std::vector<double> ObservationSet::equispaced(std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
  return s;
}

ObservationSet ObservationSet::equispaced(std::vector<Vec2> y, double sigma2) {
  ObservationSet o;
  o.s = equispaced(y.size());
  o.sigma2.assign(y.size(), sigma2);
  o.y = std::move(y);
  return o;
}

void ModelConfig::validate() const {
  shoot.validate();
  if (lie_steps < 1) throw ValidationError("model.lie_steps must be >= 1");
}

bool Misfit::ok() const { return std::isfinite(phi); }

std::vector<Vec2> spline_eval_curve(const ClosedCurve2D& q, std::span<const double> s) {
  const CurveSpline spline(q);
  std::vector<Vec2> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i])) throw InvalidInput("spline_eval_curve: non-finite parameter");
    out[i] = spline.value(s[i]);
  }
  return out;
}

namespace {

// Runs f, mapping forward-model failures to ObservationFailure.
template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ObservationFailure&) {
    throw;
  } catch (const NumericalFailure& e) {
    throw ObservationFailure(e.what());
  } catch (const DegenerateCurve& e) {
    throw ObservationFailure(e.what());
  } catch (const InvalidInput& e) {
    throw ObservationFailure(e.what());
  }
}

// Transpose of s -> spline(q)(s) with respect to the knot values of q.
std::vector<Vec2> curve_eval_adjoint(std::size_t n, std::span<const double> s, std::span<const Vec2> gbar) {
  const double h = kTwoPi / static_cast<double>(n);
  std::vector<double> cx(n, 0.0), cy(n, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto st = bspline::stencil(s[i], h, n);
    for (int a = 0; a < 4; ++a) {
      const std::size_t m = st.node(a, n);
      cx[m] += st.w[a] * gbar[i].x;
      cy[m] += st.w[a] * gbar[i].y;
    }
  }
  const auto qx = loop_prefilter(cx);
  const auto qy = loop_prefilter(cy);
  std::vector<Vec2> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = {qx[j], qy[j]};
  return out;
}

}  // namespace

ObservationModel::ObservationModel(ClosedCurve2D template_curve, const ModelConfig& cfg)
    : template_(std::move(template_curve)), cfg_(cfg), shooter_(cfg.shoot, template_.size()) {
  cfg_.validate();
}

ClosedCurve2D ObservationModel::final_curve(const ScalarLoopField& p0, const ScalarLoopField& nu) const {
  const auto rf = reparam_forward(p0, nu, template_, cfg_.lie_steps, false);
  const auto traj = shooter_.shoot(PhaseState{rf.lifted.p, rf.lifted.q});
  return traj.final_state().q;
}

ClosedCurve2D ObservationModel::final_curve_shoot_first(const ScalarLoopField& p0, const ScalarLoopField& nu) const {
  const auto traj = shooter_.shoot(PhaseState{normal_momentum(p0, template_), template_});
  const auto eta = lie_exponential(nu, cfg_.lie_steps);
  const auto& q1 = traj.final_state().q;
  return ClosedCurve2D(spline_eval_curve(q1, eta.eta));
}

std::vector<Vec2> ObservationModel::observe(const ScalarLoopField& p0, const ScalarLoopField& nu,
                                            std::span<const double> s) const {
  if (p0.size() != particles() || nu.size() != particles())
    throw ContractViolation("observe: field resolution does not match the template");
  return guarded([&] { return spline_eval_curve(final_curve(p0, nu), s); });
}

std::vector<Vec2> ObservationModel::observe(const ScalarLoopField& p0, const ScalarLoopField& nu,
                                            std::size_t n_obs) const {
  const auto s = ObservationSet::equispaced(n_obs);
  return observe(p0, nu, s);
}

Misfit ObservationModel::misfit(const ScalarLoopField& p0, const ScalarLoopField& nu, const ObservationSet& obs) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<Vec2> g;
  try {
    g = observe(p0, nu, obs.s);
  } catch (const ObservationFailure&) {
    return {inf, inf};
  }
  Misfit m;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec2 d = g[i] - obs.y[i];
    const double r2 = dot(d, d);
    m.residual_sq += r2;
    m.phi += 0.5 * r2 / obs.sigma2[i];
  }
  if (!std::isfinite(m.phi)) return {inf, inf};
  return m;
}

double ObservationModel::potential(const ScalarLoopField& p0, const ScalarLoopField& nu,
                                   const ObservationSet& obs) const {
  return misfit(p0, nu, obs).phi;
}

ObservationGradient ObservationModel::gradient(const ScalarLoopField& p0, const ScalarLoopField& nu,
                                               const ObservationSet& obs) const {
  if (p0.size() != particles() || nu.size() != particles())
    throw ContractViolation("observe_gradient: field resolution does not match the template");
  return guarded([&] {
    const auto rf = reparam_forward(p0, nu, template_, cfg_.lie_steps, true);
    const auto traj = shooter_.shoot(PhaseState{rf.lifted.p, rf.lifted.q}, true);
    const auto& q1 = traj.final_state().q;
    const auto g = spline_eval_curve(q1, obs.s);

    ObservationGradient out;
    std::vector<Vec2> gbar(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec2 d = g[i] - obs.y[i];
      out.phi += 0.5 * dot(d, d) / obs.sigma2[i];
      gbar[i] = (1.0 / obs.sigma2[i]) * d;
    }
    if (!std::isfinite(out.phi)) throw ObservationFailure("observe_gradient: non-finite potential");
    const auto qbar = curve_eval_adjoint(q1.size(), obs.s, gbar);
    const auto pg = shooter_.adjoint(traj, qbar);
    auto rg = reparam_adjoint(rf, pg.p, pg.q);
    out.p0 = std::move(rg.p0);
    out.nu = std::move(rg.nu);
    return out;
  });
}

std::vector<Vec2> observe(const ScalarLoopField& p0, const ScalarLoopField& nu, const ClosedCurve2D& template_curve,
                          const ModelConfig& cfg, std::size_t n_obs) {
  return ObservationModel(template_curve, cfg).observe(p0, nu, n_obs);
}

double potential(const ScalarLoopField& p0, const ScalarLoopField& nu, const ObservationSet& obs,
                 const ClosedCurve2D& template_curve, const ModelConfig& cfg) {
  return ObservationModel(template_curve, cfg).potential(p0, nu, obs);
}

ObservationGradient observe_gradient(const ScalarLoopField& p0, const ScalarLoopField& nu, const ObservationSet& obs,
                                     const ClosedCurve2D& template_curve, const ModelConfig& cfg) {
  return ObservationModel(template_curve, cfg).gradient(p0, nu, obs);
}

}  // namespace shapereg
