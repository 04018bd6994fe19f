#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "admg/coefficients.hpp"
#include "admg/data.hpp"
#include "admg/gibbs.hpp"
#include "admg/giw.hpp"
#include "admg/graph.hpp"
#include "admg/rng.hpp"

namespace admg {

/// Weighted Monte Carlo estimate of E[V^-1] under G-IW(params) from m
/// Bartlett proposals, using (I - C)^T Gamma^-1 (I - C) per draw.
Matrix expected_precision(const Admg& g, const GiwParams& params, std::size_t m, const RngStream& rng,
                          const SamplingOrder& order = SamplingOrder());

/// Factors of the structured approximation q(V) q(B) q(X).
struct VariationalState {
  /// q(V) = G-IW(delta + d, scale).
  GiwParams q_v;
  /// q(B): Gaussian over the free coefficients (block-diagonal by district).
  Vector b_mean;
  Matrix b_cov;
  /// q(X): independent across rows, one mean row per observation and a
  /// covariance shared by all rows (latent nodes in graph order).
  Matrix x_mean;
  Matrix x_cov;
  std::vector<double> bound_history;
  /// Bounds of the warm-up sweeps, which refresh the draw pool.
  std::vector<double> warmup_history;
};

/// Expectations under q(V) = G-IW(delta', K) for K near a reference scale.
///
/// The G-IW density factorizes over districts. Complete districts (including
/// single nodes) use the inverse-Wishart closed forms. Every other district
/// keeps a fixed pool of weighted Bartlett draws at the reference scale and
/// is reweighted to K by exp(-tr(P_s (K - K_ref)) / 2), so that log I(K) is
/// a log-sum-exp of affine functions of K and -2 times its gradient is the
/// estimated E[V^-1]. This makes every coordinate update an exact maximizer.
class VPool {
 public:
  VPool(const Admg& g, double delta, const Matrix& reference, std::size_t m, const RngStream& rng);

  struct Evaluation {
    double log_norm = 0.0;
    Matrix expected_precision;
    Matrix expected_covariance;
    double min_ess = 0.0;
  };
  Evaluation evaluate(const Matrix& scale) const;
  /// One draw from G-IW(delta, scale) (resampling m fresh proposals in
  /// incomplete districts).
  Matrix draw(const Matrix& scale, std::size_t m, RngStream& rng) const;

 private:
  struct District {
    IndexList nodes;
    Admg graph;
    double delta = 0.0;
    bool complete = false;
    Matrix reference;
    double log_iw_reference = 0.0;
    std::vector<double> log_weights;
    std::vector<Matrix> precisions;
    std::vector<Matrix> covariances;
  };
  std::size_t q_ = 0;
  std::vector<District> districts_;
};

struct VbConfig {
  std::size_t max_sweeps = 500;
  double tolerance = 1e-6;
  /// Pool draws per incomplete district.
  std::size_t pool_draws = 200;
  /// Sweeps with a fresh pool before it is frozen.
  std::size_t warmup_sweeps = 10;
  /// Proposals for the prior normalizing constant.
  std::size_t prior_draws = 5000;
  std::uint64_t seed = 1;
  bool intercepts = false;
};

void validate(const VbConfig& config);

class VariationalModel {
 public:
  VariationalModel(const Admg& g, Priors priors, const Dataset& data, VbConfig config);

  const Admg& graph() const { return graph_; }
  const VbConfig& config() const { return config_; }
  const CoefficientLayout& coefficients() const { return layout_; }
  std::size_t observations() const { return static_cast<std::size_t>(observed_.rows()); }
  const Vector& offset() const { return offset_; }
  double posterior_delta() const;

  VariationalState initial_state() const;
  VPool make_pool(const VariationalState& state, std::uint64_t index) const;

  /// Second moments of (z, 1) under q(X).
  Matrix expected_moments(const VariationalState& state) const;
  /// E over q(X) q(B) of (I - B) D (I - B)^T.
  Matrix expected_scatter(const VariationalState& state) const;

  void update_qx(VariationalState& state, const VPool& pool) const;
  void update_qb(VariationalState& state, const VPool& pool) const;
  void update_qv(VariationalState& state) const;
  double compute_bound(const VariationalState& state, const VPool& pool) const;

  /// log I(delta, U) of the prior (estimated once, fixed per model).
  double prior_log_norm() const { return prior_log_norm_; }
  /// Trace-layout names and values (q(B) means, then E_q[V]).
  std::vector<std::string> parameter_names() const;
  Vector parameter_means(const VariationalState& state, const VPool& pool) const;

 private:
  Admg graph_;
  Priors priors_;
  VbConfig config_;
  CoefficientLayout layout_;
  Matrix observed_;
  Vector offset_;
  std::vector<NodeIndex> observed_nodes_;
  std::vector<NodeIndex> latent_nodes_;
  double prior_log_norm_ = 0.0;
};

struct VbResult {
  VariationalState state;
  std::vector<std::string> names;
  /// q(B) means followed by E_q[V] entries, in the Gibbs trace layout.
  Vector means;
  std::size_t sweeps = 0;
  bool converged = false;
};

/// Coordinate ascent: update_qx, update_qb, update_qv, then the bound. The
/// first warmup_sweeps sweeps rebuild the pool at the current q(V); after
/// that the pool is frozen and the recorded bound is non-decreasing.
/// Throws NumericalError if the frozen-pool bound drops by more than
/// 10 * tolerance.
VbResult run_vb(const VariationalModel& model);
VbResult run_vb(const Admg& g, const Priors& priors, const Dataset& data, const VbConfig& config);

/// Monte Carlo plug-in predictive: mean over test rows of log mean over
/// `draws` parameter sets drawn from q(B) and (resampled) q(V).
double vb_predictive_loglik(const VariationalModel& model, const VariationalState& state, const Dataset& test,
                            std::size_t draws, const RngStream& rng);
/// The parameter sets used by vb_predictive_loglik, in data coordinates.
std::vector<Theta> vb_draw_thetas(const VariationalModel& model, const VariationalState& state, std::size_t draws,
                                  const RngStream& rng);

}  // namespace admg
