#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "admg/bartlett.hpp"
#include "admg/coefficients.hpp"
#include "admg/data.hpp"
#include "admg/giw.hpp"
#include "admg/graph.hpp"
#include "admg/rng.hpp"

namespace admg {

struct Priors {
  GiwParams v;
  BPrior b;
};

struct GibbsConfig {
  /// Total iterations, burn-in included.
  std::size_t iterations = 5000;
  std::size_t burn_in = 1000;
  std::size_t thin = 5;
  SamplingMode mode = SamplingMode::kSir;
  /// Proposals per V-step in kSir mode.
  std::size_t sir_draws = 50;
  OrderStrategy order = OrderStrategy::kGreedy;
  std::optional<SamplingOrder> given_order;
  std::uint64_t seed = 1;
  std::size_t chains = 1;
  /// Run chains on separate threads (results do not depend on this).
  bool parallel = false;
  /// Sample intercepts instead of centering the data.
  bool intercepts = false;
};

void validate(const GibbsConfig& config);

/// Mutable state of one chain. `latents` has one row per observation and one
/// column per latent node (graph order); `precision` is V^-1.
struct ChainState {
  Vector beta;
  Matrix v;
  Matrix precision;
  Matrix latents;
  std::size_t iteration = 0;
  RngStream rng{0};
  /// Diagnostics of the most recent V-step.
  double last_ess = 0.0;
  bool last_degenerate = false;
  std::size_t last_completion_solves = 0;
};

/// Immutable sampler set-up shared by all chains: graph, priors, the bound
/// (and, unless intercepts are sampled, centered) data, and the sampling
/// order of the V-step.
class GibbsSampler {
 public:
  GibbsSampler(const Admg& g, Priors priors, const Dataset& data, GibbsConfig config);

  const Admg& graph() const { return graph_; }
  const CoefficientLayout& coefficients() const { return layout_; }
  const GibbsConfig& config() const { return config_; }
  const SamplingOrder& order() const { return bartlett_->order(); }
  /// Column means removed from the data (zeros when intercepts are sampled).
  const Vector& offset() const { return offset_; }
  std::size_t observations() const { return static_cast<std::size_t>(observed_.rows()); }

  /// Prior means for B, U/(delta+2q) restricted to the graph and
  /// diagonally loaded until positive definite for V, latents at zero.
  ChainState initial_state(std::uint64_t chain) const;

  /// Second moments of (z, 1) over the completed data.
  Matrix moments(const ChainState& state) const;

  void sample_latents(ChainState& state) const;
  void sample_v(ChainState& state) const;
  void sample_b(ChainState& state) const;
  /// Same steps with precomputed moments(state).
  void sample_v(ChainState& state, const Matrix& moments) const;
  void sample_b(ChainState& state, const Matrix& moments) const;
  /// One sweep: latents, then V given B, then B given V.
  void step(ChainState& state) const;

  /// Parameters in data coordinates (the centering is folded into the intercepts).
  Theta theta(const ChainState& state) const;
  /// Trace column names and the matching values of a state.
  std::vector<std::string> parameter_names() const;
  Vector parameter_values(const ChainState& state) const;

 private:
  Admg graph_;
  Priors priors_;
  GibbsConfig config_;
  CoefficientLayout layout_;
  std::shared_ptr<const BartlettLayout> bartlett_;
  Matrix observed_;
  Vector offset_;
  std::vector<NodeIndex> observed_nodes_;
  std::vector<NodeIndex> latent_nodes_;
  std::optional<Matrix> fixed_moments_;
};

struct GibbsResult {
  std::vector<std::string> names;
  /// One row per retained iteration, chains stacked in chain order.
  Matrix trace;
  Matrix running_mean;
  std::vector<std::size_t> chain_of_row;
  std::vector<std::size_t> iteration_of_row;
  std::vector<Theta> samples;
  SamplingOrder order;
  InversionProfile profile;
  /// Measured per-draw completion solves averaged over V-steps.
  double completion_solves_per_iteration = 0.0;
  double mean_ess = 0.0;
  std::size_t degenerate_steps = 0;
  /// Wall time of every iteration of every chain, in seconds.
  std::vector<double> iteration_seconds;
};

GibbsResult run_gibbs(const Admg& g, const Priors& priors, const Dataset& data, const GibbsConfig& config);

/// Mean over test rows of log( mean over samples of N(y_obs; mu_obs, Sigma_obs) ),
/// with latents integrated out.
double predictive_loglik(const Admg& g, std::span<const Theta> samples, const Dataset& test);

/// Per-row version of predictive_loglik().
Vector predictive_loglik_rows(const Admg& g, std::span<const Theta> samples, const Dataset& test);

}  // namespace admg
