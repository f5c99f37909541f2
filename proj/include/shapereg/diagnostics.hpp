#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace shapereg {

/// Hartigan's dip statistic of a sample (sorted internally).
double dip_statistic(std::span<const double> x);

struct DipTest {
  double dip = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Dip test against the uniform null, p-value by Monte Carlo with a fixed
/// seed so repeated calls agree.
DipTest dip_test(std::span<const double> x, std::size_t n_mc = 2000, std::uint64_t seed = 0x5eed);

/// Every k-th value with k = ceil(n / ess), so the kept values are close to
/// independent.
std::vector<double> thin_by_ess(std::span<const double> x, double ess);

}  // namespace shapereg
