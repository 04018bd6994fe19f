#pragma once

#include <algorithm>
#include <cmath>

namespace admg {

template <class Cdf>
KsResult ks_one_sample(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double sqrt_n = std::sqrt(n);
  return {d, kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)};
}

}  // namespace admg
