#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "admg/coefficients.hpp"
#include "admg/data.hpp"
#include "admg/gibbs.hpp"
#include "admg/graph.hpp"
#include "admg/stats.hpp"

namespace admg {

/// One ancillary latent replacing a bi-directed edge.
struct AncillaryLatent {
  NodeIndex latent = 0;
  Edge original;
  /// Child whose coefficient is fixed at 1 (lexicographically smaller name).
  NodeIndex fixed_child = 0;
  NodeIndex free_child = 0;
};

/// DAG with one latent parent per bi-directed edge of the source graph. The
/// source nodes keep their indices; ancillary latents follow them.
struct AncillaryDag {
  Admg dag;
  std::size_t original_nodes = 0;
  std::vector<AncillaryLatent> ancillary;

  /// `base` plus the fixed unit loadings of the ancillary latents.
  BPrior coefficient_prior(const BPrior& base) const;
};

AncillaryDag to_ancillary_dag(const Admg& g);

/// Conjugate priors of the DAG sampler: coefficients as in BPrior, and an
/// independent inverse gamma (shape, rate) per node variance.
struct DagPriors {
  BPrior b;
  Vector shape;
  Vector rate;
};

/// IG((delta + 2q)/2 - 1, u_ii/2) per original node, the G-IW marginal of
/// the variance of a node without bi-directed edges (q original nodes); an
/// ancillary latent takes the prior of its fixed child.
DagPriors dag_priors(const AncillaryDag& dag, const Priors& priors);

struct DagChainState {
  Vector beta;
  Vector v;
  Matrix latents;
  std::size_t iteration = 0;
  RngStream rng{0};
};

/// Gaussian DAG Gibbs sampler: per-node coefficient and variance draws, and
/// single-site latent draws from each latent's Markov blanket. Uses the
/// same iteration, burn-in, thinning, seed, chain and intercept settings as
/// the ADMG sampler (the V-step settings do not apply).
class DagGibbsSampler {
 public:
  DagGibbsSampler(const AncillaryDag& dag, DagPriors priors, const Dataset& data, GibbsConfig config);

  const AncillaryDag& dag() const { return dag_; }
  const CoefficientLayout& coefficients() const { return layout_; }
  const GibbsConfig& config() const { return config_; }

  DagChainState initial_state(std::uint64_t chain) const;
  /// Completed data with a trailing column of ones.
  Matrix completed(const DagChainState& state) const;
  void sample_latents(DagChainState& state) const;
  void sample_v(DagChainState& state, const Matrix& moments) const;
  void sample_b(DagChainState& state, const Matrix& moments) const;
  void step(DagChainState& state) const;
  /// Cholesky factorizations per sweep (one per node with free coefficients).
  std::size_t factorizations_per_iteration() const { return layout_.blocks().size(); }

  Theta theta(const DagChainState& state) const;
  std::vector<std::string> parameter_names() const;
  Vector parameter_values(const DagChainState& state) const;

 private:
  AncillaryDag dag_;
  DagPriors priors_;
  GibbsConfig config_;
  CoefficientLayout layout_;
  Matrix observed_;
  Vector offset_;
  std::vector<NodeIndex> observed_nodes_;
  std::vector<NodeIndex> latent_nodes_;
};

struct DagGibbsResult {
  std::vector<std::string> names;
  Matrix trace;
  /// Parameters over the DAG (ancillary latents included).
  std::vector<Theta> samples;
  std::vector<double> iteration_seconds;
  std::size_t factorizations_per_iteration = 0;
};

DagGibbsResult run_dag_gibbs(const AncillaryDag& dag, const DagPriors& priors, const Dataset& data,
                             const GibbsConfig& config);

struct BenchmarkConfig {
  GibbsConfig gibbs;
  std::size_t trials = 10;
  std::size_t folds = 10;
};

void validate(const BenchmarkConfig& config);

struct BenchmarkTrial {
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  double admg_seconds = 0.0;
  double dag_seconds = 0.0;
  double admg_predictive = 0.0;
  double dag_predictive = 0.0;
};

struct TimingSummary {
  double mean = 0.0;
  double sd = 0.0;
  double per_iteration = 0.0;
};

struct BenchmarkReport {
  std::size_t nodes = 0;
  std::size_t ancillary_latents = 0;
  std::size_t iterations = 0;
  std::vector<BenchmarkTrial> trials;
  TimingSummary admg;
  TimingSummary dag;
  /// ADMG mean wall time over DAG mean wall time.
  double wall_time_ratio = 0.0;
  /// Inversion counts per iteration.
  std::size_t admg_regression_events = 0;
  double admg_completion_solves = 0.0;
  std::size_t admg_coefficient_factorizations = 0;
  std::size_t dag_factorizations = 0;
  /// Paired test of ADMG minus DAG held-out predictive log-likelihood.
  TTestResult predictive_test;
};

/// Trial t fits both samplers with seed (config seed + t) to all but fold
/// (t mod folds) and scores the held-out fold.
BenchmarkReport benchmark_compare(const Admg& g, const Priors& priors, const Dataset& data,
                                  const BenchmarkConfig& config);
/// Recomputes the summary fields from the trials.
void summarize(BenchmarkReport& report);
std::string format_report(const BenchmarkReport& report);

}  // namespace admg
