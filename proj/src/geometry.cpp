#include "shapereg/geometry.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace shapereg {

// ----------------------------------------------------------------- core types

ClosedCurve2D::ClosedCurve2D(std::vector<Vec2> points) : points_(std::move(points)) {
  if (points_.size() < 4) throw InvalidInput("closed curve needs at least 4 points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!is_finite(points_[i])) throw InvalidInput("closed curve has a non-finite point at index " + std::to_string(i));
    const Vec2& next = points_[(i + 1) % points_.size()];
    if (points_[i] == next) throw InvalidInput("closed curve has coincident consecutive points at index " + std::to_string(i));
  }
}

ScalarLoopField::ScalarLoopField(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidInput("scalar loop field has a non-finite entry");
}

TorusGridField::TorusGridField(std::size_t n) : n_(n), ux_(n * n, 0.0), uy_(n * n, 0.0) {
  if (!is_power_of_two(n)) throw InvalidInput("grid size must be a power of two");
}

TorusGridField::TorusGridField(std::size_t n, std::vector<double> ux, std::vector<double> uy)
    : n_(n), ux_(std::move(ux)), uy_(std::move(uy)) {
  if (!is_power_of_two(n)) throw InvalidInput("grid size must be a power of two");
  if (ux_.size() != n * n || uy_.size() != n * n) throw ContractViolation("grid component has the wrong size");
  for (std::size_t i = 0; i < n * n; ++i)
    if (!std::isfinite(ux_[i]) || !std::isfinite(uy_[i])) throw InvalidInput("grid field has a non-finite entry");
}

double TorusGridField::inner(const TorusGridField& other) const {
  if (other.n_ != n_) throw ContractViolation("grid sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < ux_.size(); ++i) s += ux_[i] * other.ux_[i] + uy_[i] * other.uy_[i];
  return s;
}

void MetricSpec::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("metric.alpha must be > 0");
  if (gamma < 2) throw ValidationError("metric.gamma must be >= 2");
}

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

// ------------------------------------------------------------------- loop splines

std::vector<double> loop_prefilter(std::span<const double> f) {
  const std::size_t n = f.size();
  if (n == 0) return {};
  const double z = std::sqrt(3.0) - 2.0;
  const double zn = std::pow(z, static_cast<double>(n));

  std::vector<double> cp(n);
  double acc = 0.0;
  double zi = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += zi * f[(n - i) % n];
    zi *= z;
  }
  cp[0] = acc / (1.0 - zn);
  for (std::size_t k = 1; k < n; ++k) cp[k] = f[k] + z * cp[k - 1];

  std::vector<double> c(n);
  acc = 0.0;
  zi = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += zi * cp[(n - 1 + i) % n];
    zi *= z;
  }
  c[n - 1] = -z * acc / (1.0 - zn);
  for (std::size_t k = n - 1; k-- > 0;) c[k] = z * (c[k + 1] - cp[k]);
  for (double& v : c) v *= 6.0;
  return c;
}

LoopSpline::LoopSpline(std::span<const double> samples) : coeffs_(loop_prefilter(samples)) {
  if (coeffs_.size() < 4) throw InvalidInput("loop spline needs at least 4 knots");
}

double LoopSpline::value(double s) const {
  const auto st = stencil(s);
  double v = 0.0;
  for (int m = 0; m < 4; ++m) v += coeffs_[st.node(m, size())] * st.w[m];
  return v;
}

LoopSample LoopSpline::sample(double s) const {
  const auto st = stencil(s);
  LoopSample out;
  for (int m = 0; m < 4; ++m) {
    const double c = coeffs_[st.node(m, size())];
    out.value += c * st.w[m];
    out.d1 += c * st.dw[m];
    out.d2 += c * st.d2w[m];
  }
  return out;
}

namespace {
std::vector<double> component(const ClosedCurve2D& c, bool x) {
  std::vector<double> v(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) v[i] = x ? c[i].x : c[i].y;
  return v;
}
}  // namespace

CurveSpline::CurveSpline(const ClosedCurve2D& curve)
    : x_(component(curve, true)), y_(component(curve, false)) {}

Vec2 CurveSpline::value(double s) const { return {x_.value(s), y_.value(s)}; }

void CurveSpline::sample(double s, Vec2& q, Vec2& dq, Vec2& d2q) const {
  const auto sx = x_.sample(s);
  const auto sy = y_.sample(s);
  q = {sx.value, sy.value};
  dq = {sx.d1, sy.d1};
  d2q = {sx.d2, sy.d2};
}

std::vector<double> spline_eval_loop(const ScalarLoopField& field, std::span<const double> queries) {
  const LoopSpline spline(field.values());
  std::vector<double> out;
  out.reserve(queries.size());
  for (double s : queries) {
    if (!std::isfinite(s)) throw InvalidInput("spline_eval_loop: non-finite query");
    out.push_back(spline.value(s));
  }
  return out;
}

std::vector<Vec2> curve_normal(const ClosedCurve2D& q) {
  const CurveSpline spline(q);
  const double ds = kTwoPi / static_cast<double>(q.size());
  std::vector<Vec2> normals(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    Vec2 pos, t, t2;
    spline.sample(ds * static_cast<double>(j), pos, t, t2);
    if (norm(t) < 1e-12) throw DegenerateCurve("curve_normal: vanishing tangent at index " + std::to_string(j));
    normals[j] = normal_from_tangent(t);
  }
  return normals;
}

// ----------------------------------------------------------------- spectral

namespace {
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  fftw_complex* data = nullptr;
  std::size_t size = 0;
  ~FftwBuffer() {
    if (data) fftw_free(data);
  }
  fftw_complex* get(std::size_t n) {
    if (size < n) {
      if (data) fftw_free(data);
      data = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
      size = n;
    }
    return data;
  }
};
}  // namespace

struct TorusSpectral::Plan {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

TorusSpectral::TorusSpectral(std::size_t n) : n_(n), plan_(std::make_unique<Plan>()) {
  if (!is_power_of_two(n)) throw InvalidInput("spectral grid size must be a power of two");
  std::lock_guard lock(fftw_planner_mutex());
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * n));
  const int ni = static_cast<int>(n);
  const unsigned flags = FFTW_ESTIMATE;
  plan_->forward = fftw_plan_dft_2d(ni, ni, buf, buf, FFTW_FORWARD, flags);
  plan_->backward = fftw_plan_dft_2d(ni, ni, buf, buf, FFTW_BACKWARD, flags);
  fftw_free(buf);
}

TorusSpectral::~TorusSpectral() {
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan_->forward);
  fftw_destroy_plan(plan_->backward);
}

void TorusSpectral::apply(std::span<double> ux, std::span<double> uy, std::span<const double> symbol) const {
  const std::size_t nn = n_ * n_;
  if (ux.size() != nn || uy.size() != nn || symbol.size() != nn) throw ContractViolation("TorusSpectral::apply: size mismatch");
  thread_local FftwBuffer scratch;
  fftw_complex* buf = scratch.get(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    buf[i][0] = ux[i];
    buf[i][1] = uy[i];
  }
  fftw_execute_dft(plan_->forward, buf, buf);
  const double scale = 1.0 / static_cast<double>(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    const double s = symbol[i] * scale;
    buf[i][0] *= s;
    buf[i][1] *= s;
  }
  fftw_execute_dft(plan_->backward, buf, buf);
  for (std::size_t i = 0; i < nn; ++i) {
    ux[i] = buf[i][0];
    uy[i] = buf[i][1];
  }
}

const TorusSpectral& torus_spectral(std::size_t n) {
  static std::mutex m;
  static std::map<std::size_t, std::unique_ptr<TorusSpectral>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<TorusSpectral>(n);
  return *slot;
}

std::vector<double> metric_inverse_symbol(std::size_t n, const MetricSpec& spec) {
  std::vector<double> sym(n * n);
  const double a2 = spec.alpha * spec.alpha;
  for (std::size_t a = 0; a < n; ++a) {
    const double kx = static_cast<double>(wavenumber(a, n));
    for (std::size_t b = 0; b < n; ++b) {
      const double ky = static_cast<double>(wavenumber(b, n));
      sym[a * n + b] = std::pow(1.0 + a2 * (kx * kx + ky * ky), -static_cast<double>(spec.gamma));
    }
  }
  return sym;
}

std::vector<double> grid_prefilter_symbol(std::size_t n) {
  std::vector<double> axis(n);
  for (std::size_t a = 0; a < n; ++a)
    axis[a] = (4.0 + 2.0 * std::cos(kTwoPi * static_cast<double>(a) / static_cast<double>(n))) / 6.0;
  std::vector<double> sym(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) sym[a * n + b] = 1.0 / (axis[a] * axis[b]);
  return sym;
}

TorusGridField grid_prefilter(const TorusGridField& field) {
  const std::size_t n = field.n();
  std::vector<double> ux(field.ux().begin(), field.ux().end());
  std::vector<double> uy(field.uy().begin(), field.uy().end());
  torus_spectral(n).apply(ux, uy, grid_prefilter_symbol(n));
  return TorusGridField(n, std::move(ux), std::move(uy));
}

// ------------------------------------------------------------- grid stencils

namespace grid {

Vec2 eval_value(std::span<const double> cx, std::span<const double> cy, const PointStencil& st, std::size_t n) {
  Vec2 v;
  for (int m = 0; m < 4; ++m) {
    const std::size_t row = st.sx.node(m, n) * n;
    const double wx = st.sx.w[m];
    for (int l = 0; l < 4; ++l) {
      const std::size_t idx = row + st.sy.node(l, n);
      const double w = wx * st.sy.w[l];
      v.x += cx[idx] * w;
      v.y += cy[idx] * w;
    }
  }
  return v;
}

Jet eval_jet(std::span<const double> cx, std::span<const double> cy, const PointStencil& st, std::size_t n,
             bool with_hessian) {
  Jet j;
  for (int m = 0; m < 4; ++m) {
    const std::size_t row = st.sx.node(m, n) * n;
    const double wx = st.sx.w[m], dwx = st.sx.dw[m], d2wx = st.sx.d2w[m];
    for (int l = 0; l < 4; ++l) {
      const std::size_t idx = row + st.sy.node(l, n);
      const double wy = st.sy.w[l], dwy = st.sy.dw[l], d2wy = st.sy.d2w[l];
      const double c[2] = {cx[idx], cy[idx]};
      const double w = wx * wy, gx = dwx * wy, gy = wx * dwy;
      j.value.x += c[0] * w;
      j.value.y += c[1] * w;
      for (int a = 0; a < 2; ++a) {
        j.grad[a][0] += c[a] * gx;
        j.grad[a][1] += c[a] * gy;
      }
      if (with_hessian) {
        const double hxx = d2wx * wy, hxy = dwx * dwy, hyy = wx * d2wy;
        for (int a = 0; a < 2; ++a) {
          j.hess[a][0][0] += c[a] * hxx;
          j.hess[a][0][1] += c[a] * hxy;
          j.hess[a][1][1] += c[a] * hyy;
        }
      }
    }
  }
  if (with_hessian)
    for (int a = 0; a < 2; ++a) j.hess[a][1][0] = j.hess[a][0][1];
  return j;
}

void scatter_value(std::span<double> gx, std::span<double> gy, const PointStencil& st, std::size_t n, const Vec2& v) {
  for (int m = 0; m < 4; ++m) {
    const std::size_t row = st.sx.node(m, n) * n;
    const double wx = st.sx.w[m];
    for (int l = 0; l < 4; ++l) {
      const std::size_t idx = row + st.sy.node(l, n);
      const double w = wx * st.sy.w[l];
      gx[idx] += v.x * w;
      gy[idx] += v.y * w;
    }
  }
}

void scatter_gradient(std::span<double> gx, std::span<double> gy, const PointStencil& st, std::size_t n,
                      const Vec2& v, const Vec2& dir) {
  for (int m = 0; m < 4; ++m) {
    const std::size_t row = st.sx.node(m, n) * n;
    const double wx = st.sx.w[m], dwx = st.sx.dw[m];
    for (int l = 0; l < 4; ++l) {
      const std::size_t idx = row + st.sy.node(l, n);
      const double w = dir.x * dwx * st.sy.w[l] + dir.y * wx * st.sy.dw[l];
      gx[idx] += v.x * w;
      gy[idx] += v.y * w;
    }
  }
}

}  // namespace grid

// --------------------------------------------------------- public grid ops

std::vector<Vec2> spline_eval_grid(const TorusGridField& field, std::span<const Vec2> points) {
  const TorusGridField coeffs = grid_prefilter(field);
  const std::size_t n = field.n();
  const double h = field.spacing();
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const Vec2& q : points) {
    if (!is_finite(q)) throw InvalidInput("spline_eval_grid: non-finite point");
    out.push_back(grid::eval_value(coeffs.ux(), coeffs.uy(), grid::point_stencil(q, h, n), n));
  }
  return out;
}

TorusGridField spread_to_grid(std::span<const Vec2> p, std::span<const Vec2> q, std::size_t n_g) {
  if (p.size() != q.size()) throw ContractViolation("spread_to_grid: p and q lengths differ");
  TorusGridField g(n_g);
  const double h = g.spacing();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!is_finite(q[i]) || !is_finite(p[i])) throw InvalidInput("spread_to_grid: non-finite particle data");
    grid::scatter_value(g.ux(), g.uy(), grid::point_stencil(q[i], h, n_g), n_g, p[i]);
  }
  torus_spectral(n_g).apply(g.ux(), g.uy(), grid_prefilter_symbol(n_g));
  return g;
}

TorusGridField metric_inverse(const TorusGridField& m, const MetricSpec& spec) {
  spec.validate();
  const std::size_t n = m.n();
  std::vector<double> ux(m.ux().begin(), m.ux().end());
  std::vector<double> uy(m.uy().begin(), m.uy().end());
  torus_spectral(n).apply(ux, uy, metric_inverse_symbol(n, spec));
  return TorusGridField(n, std::move(ux), std::move(uy));
}

}  // namespace shapereg
