#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "shapereg/errors.hpp"

namespace shapereg {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double a) { x *= a; y *= a; return *this; }
  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(double a, Vec2 v) { return v *= a; }
  friend Vec2 operator*(Vec2 v, double a) { return v *= a; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline bool is_finite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

// Reduces an angle or torus coordinate to [0, 2pi).
inline double wrap_angle(double s) {
  double r = std::fmod(s, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Ordered periodic sample of a planar closed curve.
///
/// Points are stored in lifted coordinates (consecutive samples are never
/// wrapped apart); grid operations reduce them to the torus on the fly.
class ClosedCurve2D {
 public:
  ClosedCurve2D() = default;
  explicit ClosedCurve2D(std::vector<Vec2> points);

  std::size_t size() const { return points_.size(); }
  const Vec2& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Vec2> points() const { return points_; }

 private:
  std::vector<Vec2> points_;
};

/// Periodic scalar function sampled at s_j = 2 pi j / n.
class ScalarLoopField {
 public:
  ScalarLoopField() = default;
  explicit ScalarLoopField(std::vector<double> values);
  static ScalarLoopField zeros(std::size_t n) { return ScalarLoopField(std::vector<double>(n, 0.0)); }
  static ScalarLoopField constant(std::size_t n, double c) { return ScalarLoopField(std::vector<double>(n, c)); }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  double knot(std::size_t j) const { return kTwoPi * static_cast<double>(j) / static_cast<double>(size()); }

 private:
  std::vector<double> values_;
};

/// Two-component field on an n x n periodic grid; node (a, b) sits at
/// (2 pi a / n, 2 pi b / n) and is stored at index a * n + b.
class TorusGridField {
 public:
  TorusGridField() = default;
  explicit TorusGridField(std::size_t n);
  TorusGridField(std::size_t n, std::vector<double> ux, std::vector<double> uy);

  std::size_t n() const { return n_; }
  double spacing() const { return kTwoPi / static_cast<double>(n_); }
  std::size_t index(std::size_t a, std::size_t b) const { return a * n_ + b; }

  std::span<const double> ux() const { return ux_; }
  std::span<const double> uy() const { return uy_; }
  std::span<double> ux() { return ux_; }
  std::span<double> uy() { return uy_; }

  // Sum over nodes of the componentwise product.
  double inner(const TorusGridField& other) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> ux_;
  std::vector<double> uy_;
};

/// Metric operator A = (1 - alpha^2 Laplacian)^gamma on the torus.
struct MetricSpec {
  double alpha = 0.4;
  int gamma = 2;

  void validate() const;
};

bool is_power_of_two(std::size_t n);

}  // namespace shapereg
