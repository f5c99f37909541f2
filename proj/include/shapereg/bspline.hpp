#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace shapereg::bspline {

// Uniform cubic B-spline stencil on a periodic lattice with spacing h. A
// coordinate x touches the four nodes first, first+1, first+2, first+3
// (mod n). Derivative weights are with respect to x, not the local offset.
struct Stencil {
  std::size_t first = 0;
  std::array<double, 4> w{};
  std::array<double, 4> dw{};
  std::array<double, 4> d2w{};

  std::size_t node(int m, std::size_t n) const { return (first + static_cast<std::size_t>(m)) % n; }
};

inline std::array<double, 4> weights(double u) {
  const double v = 1.0 - u;
  const double u2 = u * u;
  const double u3 = u2 * u;
  return {v * v * v / 6.0,
          (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
          (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
          u3 / 6.0};
}

inline std::array<double, 4> first_derivative(double u) {
  const double v = 1.0 - u;
  const double u2 = u * u;
  return {-0.5 * v * v, 1.5 * u2 - 2.0 * u, -1.5 * u2 + u + 0.5, 0.5 * u2};
}

inline std::array<double, 4> second_derivative(double u) {
  return {1.0 - u, 3.0 * u - 2.0, -3.0 * u + 1.0, u};
}

// x is any real coordinate; it is reduced modulo n*h.
inline Stencil stencil(double x, double h, std::size_t n) {
  const double t = x / h;
  const double fl = std::floor(t);
  const double u = t - fl;
  long long base = static_cast<long long>(fl) - 1;
  const long long nn = static_cast<long long>(n);
  base %= nn;
  if (base < 0) base += nn;
  Stencil s;
  s.first = static_cast<std::size_t>(base);
  s.w = weights(u);
  const auto d1 = first_derivative(u);
  const auto d2 = second_derivative(u);
  const double ih = 1.0 / h;
  for (int m = 0; m < 4; ++m) {
    s.dw[m] = d1[m] * ih;
    s.d2w[m] = d2[m] * ih * ih;
  }
  return s;
}

}  // namespace shapereg::bspline
