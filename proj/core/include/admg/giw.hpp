#pragma once

#include <memory>
#include <string>
#include <vector>

#include "admg/bartlett.hpp"
#include "admg/graph.hpp"
#include "admg/linalg.hpp"
#include "admg/rng.hpp"

namespace admg {

/// G-Inverse-Wishart parameters: density on M+(G) proportional to
/// |Sigma|^{-(delta+2q)/2} exp(-tr(Sigma^-1 U)/2). Only the bi-directed
/// edges of the accompanying graph matter.
struct GiwParams {
  double delta = 3.0;
  Matrix scale;
};

/// Throws ValidationError unless delta > 0 and scale is SPD of size q.
void validate(const GiwParams& params, std::size_t q);

enum class SamplingMode {
  /// One unweighted Bartlett proposal per call (the proposal is not the
  /// G-IW law unless the graph is complete).
  kFaithful,
  /// Sampling-importance-resampling over m weighted proposals.
  kSir,
};

const char* to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& s);

struct WeightedSample {
  Matrix sigma;
  BartlettFactors phi;
  /// log g: log of target over proposal density, up to the constant I_IW.
  double log_weight = 0.0;
  /// The same weight with the spouse-count Jacobian, reported for comparison.
  double log_weight_spouse_count = 0.0;
  Composition composition;
};

/// Bartlett-decomposition sampler for fixed (graph, params, order). All
/// quantities that depend only on the scale matrix are precomputed once, so
/// a draw only factorizes sampled non-spouse blocks.
class GiwSampler {
 public:
  GiwSampler(const Admg& g, GiwParams params, const SamplingOrder& order);
  GiwSampler(std::shared_ptr<const BartlettLayout> layout, GiwParams params);

  WeightedSample draw(RngStream& rng) const;

  const GiwParams& params() const { return params_; }
  const std::shared_ptr<const BartlettLayout>& layout() const { return layout_; }
  std::size_t dimension() const { return layout_->size(); }

 private:
  struct Step {
    double shape = 0.0;
    double rate = 0.0;
    Vector mean;                            // U_PP^-1 U_P,k over all predecessors
    std::optional<Eigen::LLT<Matrix>> spouse_cov;  // (U_PP^-1)_{sp,sp}
    Matrix nsp_precision;                   // U_{nsp,nsp}
    Matrix nsp_from_sp;                     // U_{nsp,nsp}^-1 U_{nsp,sp}
    double nsp_log_det = 0.0;               // log|U_{nsp,nsp}|
  };

  std::shared_ptr<const BartlettLayout> layout_;
  GiwParams params_;
  std::vector<Step> steps_;
};

WeightedSample sample_proposal(const Admg& g, const GiwParams& params, const SamplingOrder& order,
                               RngStream& rng);

/// (delta + d, U + D).
GiwParams posterior_params(const GiwParams& prior, const Matrix& sufficient, double count);

/// Closed-form log I_IW(delta, U): the complete-graph integral, i.e. the
/// normalizer of an inverse Wishart with delta + q - 1 degrees of freedom.
double log_iw_norm_const(double delta, const Matrix& scale);

struct NormConstEstimate {
  double log_value = 0.0;
  double std_error = 0.0;
  double log_iw = 0.0;
  double ess = 0.0;
  std::size_t draws = 0;
};

/// log I_G = log I_IW + log mean g over m proposals (each draw on its own
/// split stream). Standard error by the delta method.
NormConstEstimate estimate_norm_const(const GiwSampler& sampler, std::size_t m, const RngStream& rng);
NormConstEstimate estimate_norm_const(const Admg& g, const GiwParams& params, std::size_t m,
                                      const RngStream& rng,
                                      const SamplingOrder& order = SamplingOrder());

struct MarginalLikelihood {
  double log_value = 0.0;
  double std_error = 0.0;
  NormConstEstimate posterior;
  NormConstEstimate prior;
};

/// log p(D | G) for zero-mean data with sufficient statistic D from d rows.
/// The reported standard error treats the two integrals as independent.
MarginalLikelihood log_marginal_likelihood(const Admg& g, const GiwParams& prior, const Matrix& sufficient,
                                           double count, std::size_t m, const RngStream& rng,
                                           const SamplingOrder& order = SamplingOrder());

/// -((delta+2q)/2) log|Sigma| - tr(Sigma^-1 U)/2 after a membership check.
double giw_log_density_unnorm(const Matrix& sigma, const GiwParams& params, const Admg& g);

struct SirDraw {
  WeightedSample sample;
  double ess = 0.0;
  /// Set when the effective sample size is below 2.
  bool degenerate = false;
};

/// Draws m proposals and returns one picked with probability proportional to its weight.
SirDraw resample(const GiwSampler& sampler, std::size_t m, RngStream& rng);
SirDraw resample_exact(const Admg& g, const GiwParams& params, std::size_t m, RngStream& rng,
                       const SamplingOrder& order = SamplingOrder());

/// One covariance draw in the requested mode (m is ignored for kFaithful).
SirDraw draw_covariance(const GiwSampler& sampler, SamplingMode mode, std::size_t m, RngStream& rng);

}  // namespace admg
