#include "shapereg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shapereg {

void OptimizerConfig::validate() const {
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
    throw ValidationError("optimizer: need 0 < wolfe_c1 < wolfe_c2 < 1");
  if (!(grad_tol >= 0.0)) throw ValidationError("optimizer.grad_tol must be >= 0");
  if (!(step_tol >= 0.0)) throw ValidationError("optimizer.step_tol must be >= 0");
  if (max_line_search < 1) throw ValidationError("optimizer.max_line_search must be >= 1");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct Probe {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;
  std::vector<double> x;
  std::vector<double> g;
};

class LineSearch {
 public:
  LineSearch(const Objective& f, const OptimizerConfig& opt, std::span<const double> x0, std::span<const double> d,
             double f0, double slope0)
      : f_(f), opt_(opt), x0_(x0), d_(d), f0_(f0), slope0_(slope0) {}

  // Returns true with `out` set on success.
  bool run(double alpha1, Probe& out) {
    Probe prev{0.0, f0_, slope0_, {}, {}};
    double alpha = alpha1;
    for (std::size_t i = 0; i < opt_.max_line_search; ++i) {
      Probe cur = eval(alpha);
      if (!std::isfinite(cur.f)) {
        // Outside the domain: pull back towards the last good point.
        alpha = 0.5 * (prev.alpha + alpha);
        continue;
      }
      if (cur.f > f0_ + opt_.wolfe_c1 * alpha * slope0_ || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur, out);
      if (std::abs(cur.slope) <= -opt_.wolfe_c2 * slope0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, out);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return false;
  }

 private:
  Probe eval(double alpha) {
    Probe p;
    p.alpha = alpha;
    p.x.resize(x0_.size());
    p.g.assign(x0_.size(), 0.0);
    for (std::size_t i = 0; i < x0_.size(); ++i) p.x[i] = x0_[i] + alpha * d_[i];
    p.f = f_(p.x, p.g);
    p.slope = std::isfinite(p.f) ? dot(p.g, d_) : 0.0;
    return p;
  }

  bool zoom(Probe lo, Probe hi, Probe& out) {
    for (std::size_t i = 0; i < opt_.max_line_search; ++i) {
      const double a_lo = lo.alpha, a_hi = hi.alpha;
      double a = cubic_min(lo, hi);
      const double left = std::min(a_lo, a_hi), right = std::max(a_lo, a_hi), w = right - left;
      if (!std::isfinite(a) || a < left + 0.1 * w || a > right - 0.1 * w) a = 0.5 * (a_lo + a_hi);
      if (w <= 1e-16 * std::max(1.0, right)) return false;
      Probe cur = eval(a);
      if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.wolfe_c1 * a * slope0_ || cur.f >= lo.f) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.slope) <= -opt_.wolfe_c2 * slope0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = std::move(lo);
      lo = std::move(cur);
    }
    return false;
  }

  // Minimiser of the cubic through (alpha, f, slope) at both ends.
  static double cubic_min(const Probe& a, const Probe& b) {
    if (!std::isfinite(a.f) || !std::isfinite(b.f)) return std::numeric_limits<double>::quiet_NaN();
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    return b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
  }

  const Objective& f_;
  const OptimizerConfig& opt_;
  std::span<const double> x0_;
  std::span<const double> d_;
  double f0_;
  double slope0_;
};

}  // namespace

BfgsResult bfgs_minimize(const Objective& f, std::vector<double> x0, const OptimizerConfig& opt) {
  opt.validate();
  const std::size_t n = x0.size();
  BfgsResult r;
  r.x = std::move(x0);
  r.grad.assign(n, 0.0);
  r.value = f(r.x, r.grad);
  r.initial_value = r.value;
  if (!std::isfinite(r.value)) throw InvalidInput("bfgs_minimize: objective is not finite at the initial point");

  std::vector<double> h(n * n, 0.0);
  auto reset_h = [&](double scale) {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = scale;
  };
  reset_h(1.0);
  bool first = true;
  std::vector<double> d(n), s(n), y(n), hy(n);

  for (r.iterations = 0; r.iterations < opt.max_iters; ++r.iterations) {
    const double gnorm = norm2(r.grad);
    if (gnorm <= opt.grad_tol) {
      r.converged = true;
      r.reason = "gradient tolerance";
      return r;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc -= h[i * n + j] * r.grad[j];
      d[i] = acc;
    }
    double slope = dot(r.grad, d);
    if (!(slope < 0.0)) {
      reset_h(1.0);
      for (std::size_t i = 0; i < n; ++i) d[i] = -r.grad[i];
      slope = -gnorm * gnorm;
    }
    const double alpha1 = first ? std::min(1.0, 1.0 / gnorm) : 1.0;
    Probe next;
    LineSearch ls(f, opt, r.x, d, r.value, slope);
    if (!ls.run(alpha1, next)) {
      // Retry once along steepest descent with a fresh Hessian estimate.
      reset_h(1.0);
      for (std::size_t i = 0; i < n; ++i) d[i] = -r.grad[i];
      slope = -gnorm * gnorm;
      first = true;
      LineSearch retry(f, opt, r.x, d, r.value, slope);
      if (!retry.run(std::min(1.0, 1.0 / gnorm), next)) {
        r.degraded = true;
        r.reason = "line search failed";
        return r;
      }
    }
    r.steps.push_back({next.alpha, r.value, next.f, slope, next.slope});
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = next.x[i] - r.x[i];
      y[i] = next.g[i] - r.grad[i];
    }
    const double step = norm2(s);
    r.x = std::move(next.x);
    r.grad = std::move(next.g);
    r.value = next.f;
    r.history.push_back(r.value);
    if (step <= opt.step_tol * (1.0 + norm2(r.x))) {
      r.converged = norm2(r.grad) <= opt.grad_tol;
      ++r.iterations;
      r.reason = "step tolerance";
      return r;
    }

    const double sy = dot(s, y);
    if (sy <= 1e-12 * step * norm2(y)) continue;  // curvature too weak, keep H
    if (first) {
      reset_h(sy / dot(y, y));
      first = false;
    }
    // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T.
    const double rho = 1.0 / sy;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += h[i * n + j] * y[j];
      hy[i] = acc;
    }
    const double yhy = dot(y, hy);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
  }
  r.converged = norm2(r.grad) <= opt.grad_tol;
  r.reason = r.converged ? "gradient tolerance" : "iteration limit";
  return r;
}

double map_objective(const ObservationModel& model, const SpectralBasis& p0_basis, const SpectralBasis& nu_basis,
                     const ObservationSet& obs, const CoefficientPrior& prior, std::span<const double> p0,
                     std::span<const double> nu, std::span<double> grad_p0, std::span<double> grad_nu) {
  const ScalarLoopField pf(p0_basis.synthesize(p0)), nf(nu_basis.synthesize(nu));
  double cm = 0.0;
  for (std::size_t i = 0; i < p0.size(); ++i) cm += p0[i] * p0[i] / prior.p0[i];
  for (std::size_t i = 0; i < nu.size(); ++i) cm += nu[i] * nu[i] / prior.nu[i];
  const bool want_grad = !grad_p0.empty() || !grad_nu.empty();
  if (!want_grad) return model.potential(pf, nf, obs) + 0.5 * cm;
  ObservationGradient g;
  try {
    g = model.gradient(pf, nf, obs);
  } catch (const ObservationFailure&) {
    return std::numeric_limits<double>::infinity();
  }
  if (!grad_p0.empty()) {
    const auto gp = p0_basis.synthesize_adjoint(g.p0);
    for (std::size_t i = 0; i < p0.size(); ++i) grad_p0[i] = gp[i] + p0[i] / prior.p0[i];
  }
  if (!grad_nu.empty()) {
    const auto gn = nu_basis.synthesize_adjoint(g.nu);
    for (std::size_t i = 0; i < nu.size(); ++i) grad_nu[i] = gn[i] + nu[i] / prior.nu[i];
  }
  return g.phi + 0.5 * cm;
}

MapEstimate map_estimate(const ObservationModel& model, const SpectralBasis& p0_basis, const SpectralBasis& nu_basis,
                         const ObservationSet& obs, const CoefficientPrior& prior, std::span<const double> p0_init,
                         std::span<const double> nu_init, const OptimizerConfig& opt) {
  const std::size_t np = prior.p0.size(), nn = prior.nu.size();
  if (p0_init.size() != np || nu_init.size() != nn) throw ContractViolation("map_estimate: initial state dimension mismatch");
  std::vector<double> sd(np + nn);
  for (std::size_t i = 0; i < np; ++i) sd[i] = std::sqrt(prior.p0[i]);
  for (std::size_t i = 0; i < nn; ++i) sd[np + i] = std::sqrt(prior.nu[i]);

  Objective f = [&](std::span<const double> z, std::span<double> gz) {
    std::vector<double> c(np + nn), g(np + nn);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = sd[i] * z[i];
    const double v = map_objective(model, p0_basis, nu_basis, obs, prior, std::span(c).first(np),
                                   std::span(c).subspan(np), std::span(g).first(np), std::span(g).subspan(np));
    for (std::size_t i = 0; i < c.size(); ++i) gz[i] = sd[i] * g[i];
    return v;
  };
  std::vector<double> z0(np + nn);
  for (std::size_t i = 0; i < np; ++i) z0[i] = p0_init[i] / sd[i];
  for (std::size_t i = 0; i < nn; ++i) z0[np + i] = nu_init[i] / sd[np + i];

  const BfgsResult r = bfgs_minimize(f, std::move(z0), opt);
  MapEstimate m;
  m.p0.resize(np);
  m.nu.resize(nn);
  for (std::size_t i = 0; i < np; ++i) m.p0[i] = sd[i] * r.x[i];
  for (std::size_t i = 0; i < nn; ++i) m.nu[i] = sd[np + i] * r.x[np + i];
  m.value = r.value;
  m.initial_value = r.initial_value;
  m.iterations = r.iterations;
  m.converged = r.converged;
  m.degraded = r.degraded;
  m.reason = r.reason;
  return m;
}

}  // namespace shapereg
