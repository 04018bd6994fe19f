#include "admg/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace admg {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : values) s += std::exp(v - mx);
  return mx + std::log(s);
}

double log_mean_exp(std::span<const double> values) {
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

std::vector<double> normalized_weights(std::span<const double> log_weights) {
  const double lse = log_sum_exp(log_weights);
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - lse);
  return w;
}

double effective_sample_size(std::span<const double> log_weights) {
  const auto w = normalized_weights(log_weights);
  double s2 = 0.0;
  for (double x : w) s2 += x * x;
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double standard_deviation(std::span<const double> xs) { return std::sqrt(variance(xs)); }

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double h = p * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

WeightedMoments weighted_mean(std::span<const double> values, std::span<const double> log_weights) {
  if (values.size() != log_weights.size() || values.empty()) {
    throw std::invalid_argument("weighted_mean: size mismatch");
  }
  const auto w = normalized_weights(log_weights);
  WeightedMoments out;
  for (std::size_t i = 0; i < w.size(); ++i) out.mean += w[i] * values[i];
  double v = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    v += w[i] * w[i] * (values[i] - out.mean) * (values[i] - out.mean);
    s2 += w[i] * w[i];
  }
  out.std_error = std::sqrt(v);
  out.ess = s2 > 0.0 ? 1.0 / s2 : 0.0;
  return out;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired_t_test: need >= 2 pairs");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  TTestResult r;
  r.dof = diff.size() - 1;
  r.mean_difference = mean(diff);
  const double se = standard_deviation(diff) / std::sqrt(static_cast<double>(diff.size()));
  if (se == 0.0) {
    r.t = r.mean_difference == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.mean_difference);
    r.p_value = r.mean_difference == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = r.mean_difference / se;
  boost::math::students_t dist(static_cast<double>(r.dof));
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
  return r;
}

double kolmogorov_tail(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_two_sample_weighted(std::span<const double> xs, std::span<const double> wx,
                                std::span<const double> ys, std::span<const double> wy) {
  auto prepare = [](std::span<const double> v, std::span<const double> w) {
    std::vector<std::pair<double, double>> out(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) total += w[i];
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = {v[i], w[i] / total};
    std::sort(out.begin(), out.end());
    double s2 = 0.0;
    for (const auto& p : out) s2 += p.second * p.second;
    return std::make_pair(out, 1.0 / s2);
  };
  const auto [a, na] = prepare(xs, wx);
  const auto [b, nb] = prepare(ys, wy);
  std::size_t i = 0;
  std::size_t j = 0;
  double fa = 0.0;
  double fb = 0.0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    const double x = std::min(i < a.size() ? a[i].first : INFINITY, j < b.size() ? b[j].first : INFINITY);
    while (i < a.size() && a[i].first <= x) fa += a[i++].second;
    while (j < b.size() && b[j].first <= x) fb += b[j++].second;
    d = std::max(d, std::fabs(fa - fb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d)};
}

}  // namespace admg
