#include "shapereg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "shapereg/errors.hpp"

namespace shapereg {

namespace {

// Port of the Hartigan & Hartigan (1985) GCM/LCM algorithm on sorted data,
// indices 1..n. Returns the dip in units of observations (before scaling).
double dip_sorted(const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<double> x(n + 1);
  for (int i = 0; i < n; ++i) x[i + 1] = xs[i];
  double dip = 1.0;
  if (n < 2 || x[n] == x[1]) return dip;

  std::vector<int> mn(n + 1), mj(n + 1), gcm(n + 2), lcm(n + 2);
  mn[1] = 1;
  for (int j = 2; j <= n; ++j) {
    mn[j] = j - 1;
    for (;;) {
      const int mnj = mn[j];
      const int mnmnj = mn[mnj];
      if (mnj == 1 || (x[j] - x[mnj]) * (mnj - mnmnj) < (x[mnj] - x[mnmnj]) * (j - mnj)) break;
      mn[j] = mnmnj;
    }
  }
  mj[n] = n;
  for (int k = n - 1; k >= 1; --k) {
    mj[k] = k + 1;
    for (;;) {
      const int mjk = mj[k];
      const int mjmjk = mj[mjk];
      if (mjk == n || (x[k] - x[mjk]) * (mjk - mjmjk) < (x[mjk] - x[mjmjk]) * (k - mjk)) break;
      mj[k] = mjmjk;
    }
  }

  int low = 1, high = n;
  for (;;) {
    gcm[1] = high;
    int i = 1;
    while (gcm[i] > low) {
      gcm[i + 1] = mn[gcm[i]];
      ++i;
    }
    const int l_gcm = i;
    int ig = l_gcm, ix = ig - 1;

    lcm[1] = low;
    i = 1;
    while (lcm[i] < high) {
      lcm[i + 1] = mj[lcm[i]];
      ++i;
    }
    const int l_lcm = i;
    int ih = l_lcm, iv = 2;

    long double d = 0.0L;
    if (l_gcm != 2 || l_lcm != 2) {
      do {
        long double dx;
        const int gcmix = gcm[ix], lcmiv = lcm[iv];
        if (gcmix > lcmiv) {
          const int gcmi1 = gcm[ix + 1];
          dx = (lcmiv - gcmi1 + 1) -
               (static_cast<long double>(x[lcmiv]) - x[gcmi1]) * (gcmix - gcmi1) / (x[gcmix] - x[gcmi1]);
          ++iv;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv - 1;
          }
        } else {
          const int lcmiv1 = lcm[iv - 1];
          dx = (static_cast<long double>(x[gcmix]) - x[lcmiv1]) * (lcmiv - lcmiv1) / (x[lcmiv] - x[lcmiv1]) -
               (gcmix - lcmiv1 - 1);
          --ix;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv;
          }
        }
        if (ix < 1) ix = 1;
        if (iv > l_lcm) iv = l_lcm;
      } while (gcm[ix] != lcm[iv]);
    } else {
      d = 1.0L;
    }
    if (d < dip) break;

    double dip_l = 0.0;
    for (int j = ig; j < l_gcm; ++j) {
      double max_t = 1.0;
      const int jb = gcm[j + 1], je = gcm[j];
      if (je - jb > 1 && x[je] != x[jb]) {
        const double c = (je - jb) / (x[je] - x[jb]);
        for (int jj = jb; jj <= je; ++jj) max_t = std::max(max_t, (jj - jb + 1) - (x[jj] - x[jb]) * c);
      }
      dip_l = std::max(dip_l, max_t);
    }
    double dip_u = 0.0;
    for (int j = ih; j < l_lcm; ++j) {
      double max_t = 1.0;
      const int jb = lcm[j], je = lcm[j + 1];
      if (je - jb > 1 && x[je] != x[jb]) {
        const double c = (je - jb) / (x[je] - x[jb]);
        for (int jj = jb; jj <= je; ++jj) max_t = std::max(max_t, (x[jj] - x[jb]) * c - (jj - jb - 1));
      }
      dip_u = std::max(dip_u, max_t);
    }
    dip = std::max({dip, dip_l, dip_u});

    if (low == gcm[ig] && high == lcm[ih]) break;
    low = gcm[ig];
    high = lcm[ih];
  }
  return dip;
}

}  // namespace

double dip_statistic(std::span<const double> x) {
  if (x.empty()) throw ContractViolation("dip_statistic: empty sample");
  std::vector<double> xs(x.begin(), x.end());
  std::sort(xs.begin(), xs.end());
  return 0.5 * dip_sorted(xs) / static_cast<double>(xs.size());
}

DipTest dip_test(std::span<const double> x, std::size_t n_mc, std::uint64_t seed) {
  DipTest t;
  t.n = x.size();
  t.dip = dip_statistic(x);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> u(x.size());
  std::size_t exceed = 0;
  for (std::size_t m = 0; m < n_mc; ++m) {
    for (double& v : u) v = unif(rng);
    if (dip_statistic(u) >= t.dip) ++exceed;
  }
  t.p_value = (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(n_mc));
  return t;
}

std::vector<double> thin_by_ess(std::span<const double> x, double ess) {
  if (x.empty()) return {};
  const double n = static_cast<double>(x.size());
  const auto step = static_cast<std::size_t>(std::ceil(n / std::max(1.0, std::min(ess, n))));
  std::vector<double> out;
  for (std::size_t i = 0; i < x.size(); i += std::max<std::size_t>(1, step)) out.push_back(x[i]);
  return out;
}

}  // namespace shapereg
