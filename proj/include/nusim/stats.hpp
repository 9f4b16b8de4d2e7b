#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace nusim {

/// sqrt(p (1 - p) / n).
double binomial_sigma(double p, std::size_t n) noexcept;

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda) noexcept;

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// One-sample Kolmogorov-Smirnov test of `samples` against a continuous CDF,
/// p-value with Stephens' finite-n correction.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

}  // namespace nusim
