#pragma once

#include <span>
#include <vector>

namespace admg {

double log_sum_exp(std::span<const double> values);
double log_mean_exp(std::span<const double> values);

/// Normalized weights exp(lw - lse(lw)).
std::vector<double> normalized_weights(std::span<const double> log_weights);

/// (sum w)^2 / sum w^2 computed from log-weights.
double effective_sample_size(std::span<const double> log_weights);

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);  // unbiased
double standard_deviation(std::span<const double> xs);

/// Value below which a fraction p of the sorted sample falls (linear interpolation).
double quantile(std::vector<double> xs, double p);

struct WeightedMoments {
  double mean = 0.0;
  /// Delta-method standard error of the self-normalized estimate.
  double std_error = 0.0;
  double ess = 0.0;
};

WeightedMoments weighted_mean(std::span<const double> values,
                              std::span<const double> log_weights);

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  double mean_difference = 0.0;
  std::size_t dof = 0;
};

/// Two-sided paired t-test on a - b.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Asymptotic Kolmogorov distribution tail P(K > x).
double kolmogorov_tail(double x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample KS test against a continuous CDF.
template <class Cdf>
KsResult ks_one_sample(std::vector<double> xs, Cdf cdf);

/// Two-sample KS test with per-sample weights (Kish effective sizes for the p-value).
KsResult ks_two_sample_weighted(std::span<const double> xs, std::span<const double> wx,
                                std::span<const double> ys, std::span<const double> wy);

}  // namespace admg

#include "admg/stats_inl.hpp"
