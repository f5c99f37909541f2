#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "shapereg/bspline.hpp"
#include "shapereg/types.hpp"

namespace shapereg {

// ---------------------------------------------------------------------------
// Periodic cubic B-spline interpolation on the loop s in [0, 2 pi).
// ---------------------------------------------------------------------------

/// Solves the periodic interpolation system (c[j-1] + 4 c[j] + c[j+1]) / 6 = f[j]
/// for B-spline coefficients. The operator is a symmetric circulant, so the
/// same routine is its own transpose.
std::vector<double> loop_prefilter(std::span<const double> samples);

struct LoopSample {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Interpolating periodic cubic spline through n equispaced knots.
class LoopSpline {
 public:
  LoopSpline() = default;
  explicit LoopSpline(std::span<const double> samples);

  std::size_t size() const { return coeffs_.size(); }
  double spacing() const { return kTwoPi / static_cast<double>(coeffs_.size()); }
  std::span<const double> coefficients() const { return coeffs_; }

  double value(double s) const;
  LoopSample sample(double s) const;
  bspline::Stencil stencil(double s) const { return bspline::stencil(s, spacing(), size()); }

 private:
  std::vector<double> coeffs_;
};

/// Spline through the two coordinate sequences of a closed curve.
class CurveSpline {
 public:
  CurveSpline() = default;
  explicit CurveSpline(const ClosedCurve2D& curve);

  std::size_t size() const { return x_.size(); }
  Vec2 value(double s) const;
  void sample(double s, Vec2& q, Vec2& dq, Vec2& d2q) const;

 private:
  LoopSpline x_;
  LoopSpline y_;
};

/// Values of the interpolating spline of `field` at each query angle.
std::vector<double> spline_eval_loop(const ScalarLoopField& field, std::span<const double> queries);

/// Outward unit normal of the curve at each knot: the spline tangent rotated
/// clockwise by pi/2, which points outward for a counterclockwise curve.
std::vector<Vec2> curve_normal(const ClosedCurve2D& q);

/// Unit normal from a tangent vector (same convention as curve_normal).
inline Vec2 normal_from_tangent(const Vec2& t) {
  const double len = norm(t);
  return {t.y / len, -t.x / len};
}

// ---------------------------------------------------------------------------
// Torus grid: spectral multipliers, interpolation and spreading.
// ---------------------------------------------------------------------------

/// FFT-backed application of real, even Fourier multipliers to both
/// components of a grid field at once. Thread safe after construction.
class TorusSpectral {
 public:
  explicit TorusSpectral(std::size_t n);
  ~TorusSpectral();
  TorusSpectral(const TorusSpectral&) = delete;
  TorusSpectral& operator=(const TorusSpectral&) = delete;

  std::size_t n() const { return n_; }

  // In-place: (ux, uy) <- F^{-1}[ symbol * F[(ux, uy)] ]. `symbol` holds n*n
  // entries laid out like the grid.
  void apply(std::span<double> ux, std::span<double> uy, std::span<const double> symbol) const;

 private:
  struct Plan;
  std::size_t n_;
  std::unique_ptr<Plan> plan_;
};

/// Shared spectral engine for grid size n (created lazily, cached).
const TorusSpectral& torus_spectral(std::size_t n);

/// Signed integer wavenumber of FFT index a on an n-point axis.
inline long wavenumber(std::size_t a, std::size_t n) {
  const long k = static_cast<long>(a);
  return k <= static_cast<long>(n / 2) ? k : k - static_cast<long>(n);
}

/// (1 + alpha^2 |k|^2)^(-gamma).
std::vector<double> metric_inverse_symbol(std::size_t n, const MetricSpec& spec);
/// Inverse of the tensor B-spline sampling symbol: nodal values -> coefficients.
std::vector<double> grid_prefilter_symbol(std::size_t n);

/// Nodal values -> tensor B-spline coefficients.
TorusGridField grid_prefilter(const TorusGridField& field);

/// Interpolates a field given by nodal values at arbitrary points.
std::vector<Vec2> spline_eval_grid(const TorusGridField& field, std::span<const Vec2> points);

/// Exact transpose of spline_eval_grid: returns G with
/// <G, w>_grid = sum_i <p_i, spline_eval_grid(w, q)_i> for every w.
TorusGridField spread_to_grid(std::span<const Vec2> p, std::span<const Vec2> q, std::size_t n_g);

/// u = A^{-1} m componentwise in Fourier space.
TorusGridField metric_inverse(const TorusGridField& m, const MetricSpec& spec);

// Low-level helpers operating on B-spline coefficient grids.
namespace grid {

struct PointStencil {
  bspline::Stencil sx;
  bspline::Stencil sy;
};

inline PointStencil point_stencil(const Vec2& q, double h, std::size_t n) {
  return {bspline::stencil(q.x, h, n), bspline::stencil(q.y, h, n)};
}

/// Value, gradient and Hessian of a coefficient field at one point.
/// grad[a][b] = d u_a / d x_b; hess[a][b][c] = d^2 u_a / d x_b d x_c.
struct Jet {
  Vec2 value;
  double grad[2][2] = {{0, 0}, {0, 0}};
  double hess[2][2][2] = {{{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}};
};

Vec2 eval_value(std::span<const double> cx, std::span<const double> cy, const PointStencil& st, std::size_t n);
Jet eval_jet(std::span<const double> cx, std::span<const double> cy, const PointStencil& st, std::size_t n,
             bool with_hessian);

/// Adds v * W(q) into (gx, gy).
void scatter_value(std::span<double> gx, std::span<double> gy, const PointStencil& st, std::size_t n, const Vec2& v);
/// Adds sum_b dir_b * dW/dx_b(q) * v into (gx, gy).
void scatter_gradient(std::span<double> gx, std::span<double> gy, const PointStencil& st, std::size_t n,
                      const Vec2& v, const Vec2& dir);

}  // namespace grid

}  // namespace shapereg
