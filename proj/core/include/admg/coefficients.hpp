#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "admg/bartlett.hpp"
#include "admg/graph.hpp"
#include "admg/linalg.hpp"

namespace admg {

/// Independent Gaussian prior of one structural coefficient, or a fixed value.
struct CoefficientPrior {
  double mean = 0.0;
  double variance = 1.0;
  std::optional<double> fixed;
};

struct BPrior {
  CoefficientPrior edge;
  CoefficientPrior intercept{0.0, 100.0, std::nullopt};
  /// Per-edge settings keyed by (parent, child).
  std::map<Edge, CoefficientPrior> overrides;

  const CoefficientPrior& for_edge(NodeIndex parent, NodeIndex child) const;
};

/// Parent value marking an intercept (the constant pseudo-node).
inline constexpr NodeIndex kConstantNode = std::numeric_limits<NodeIndex>::max();

struct Coefficient {
  NodeIndex child = 0;
  NodeIndex parent = 0;
  CoefficientPrior prior;

  bool is_intercept() const { return parent == kConstantNode; }
};

/// All structural coefficients of a graph (directed edges, then intercepts
/// when enabled) and the free subset that samplers update. Free
/// coefficients are grouped by the district of their child: with V
/// block-diagonal across districts those groups are a posteriori independent.
class CoefficientLayout {
 public:
  CoefficientLayout(const Admg& g, const BPrior& prior, bool intercepts);

  std::size_t node_count() const { return q_; }
  bool has_intercepts() const { return intercepts_; }
  const std::vector<Coefficient>& coefficients() const { return all_; }
  /// Indices into coefficients() of the free entries, in free-vector order.
  const std::vector<std::size_t>& free() const { return free_; }
  std::size_t free_count() const { return free_.size(); }
  const Coefficient& free_coefficient(std::size_t k) const { return all_[free_[k]]; }
  /// Positions in the free vector, one list per district with free entries.
  const std::vector<std::vector<std::size_t>>& blocks() const { return blocks_; }

  Vector prior_means() const;
  Vector prior_precisions() const;

  /// [I - B, -mean]: q x (q + 1) map from (z, 1) to structural residuals.
  Matrix augmented(const Vector& beta) const;
  Theta theta(const Vector& beta, const Matrix& v) const;
  Vector free_values(const Theta& theta) const;

  /// Trace column name: b[child<-parent] or mu[child].
  std::string name(std::size_t k, const Admg& g) const;

 private:
  std::size_t q_ = 0;
  bool intercepts_ = false;
  std::vector<Coefficient> all_;
  std::vector<std::size_t> free_;
  std::vector<std::vector<std::size_t>> blocks_;
};

/// Canonical-form Gaussian over one block of free coefficients.
struct GaussianConditional {
  Matrix precision;
  Vector linear;
};

/// Conditional of block `block` of the free coefficients on
///   -1/2 tr(W A M A^T) + log prior,
/// with A = augmented(beta), W the error precision and M the second moment
/// matrix of (z, 1). The block's own entries of `beta` are ignored; all
/// other coefficients stay at their values in `beta`. With W and M replaced
/// by expectations this is also the mean-field update.
GaussianConditional coefficient_conditional(const CoefficientLayout& layout, const std::vector<std::size_t>& block,
                                            const Matrix& w, const Matrix& moments, const Vector& beta);

/// Expectation of A M A^T when the free coefficients have mean `mean` and
/// covariance `cov` (independent of M).
Matrix expected_residual_scatter(const CoefficientLayout& layout, const Vector& mean, const Matrix& cov,
                                 const Matrix& moments);

}  // namespace admg
