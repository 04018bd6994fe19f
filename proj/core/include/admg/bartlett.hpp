#pragma once

#include <memory>
#include <vector>

#include "admg/graph.hpp"
#include "admg/linalg.hpp"

namespace admg {

/// Parameters {B, V} of a Gaussian ADMG plus structural intercepts.
/// B(child, parent) holds the coefficient of parent -> child; V is the error
/// covariance with zeros at pairs without a bi-directed edge.
struct Theta {
  Matrix B;
  Matrix V;
  Vector mean;

  static Theta zeros(std::size_t q);
};

/// (I - B)^-1 V (I - B)^-T.
Matrix implied_covariance(const Theta& theta);
/// (I - B)^-1 mean.
Vector implied_mean(const Theta& theta);

/// Which preceding positions are spouses / non-spouses of each position of a
/// sampling order. Everything is expressed in position coordinates.
class BartlettLayout {
 public:
  BartlettLayout(const Admg& g, SamplingOrder order);

  std::size_t size() const { return order_.size(); }
  const SamplingOrder& order() const { return order_; }
  /// Order as Eigen indices, for permute_symmetric().
  const IndexList& permutation() const { return permutation_; }

  const IndexList& spouses(std::size_t position) const { return spouses_.at(position); }
  const IndexList& non_spouses(std::size_t position) const { return non_spouses_.at(position); }
  /// Number of spouses placed after `position`.
  std::size_t later_spouses(std::size_t position) const { return later_spouses_.at(position); }
  bool adjacent(std::size_t pa, std::size_t pb) const;

 private:
  SamplingOrder order_;
  IndexList permutation_;
  std::vector<IndexList> spouses_;
  std::vector<IndexList> non_spouses_;
  std::vector<std::size_t> later_spouses_;
  std::vector<char> adjacent_;
};

std::shared_ptr<const BartlettLayout> make_layout(const Admg& g, const SamplingOrder& order);

/// Free Bartlett parameters of a matrix in M+(G): the residual variance of
/// every position and the regression coefficients on preceding spouses.
struct BartlettFactors {
  std::shared_ptr<const BartlettLayout> layout;
  Vector gammas;
  /// coeffs[k] is aligned with layout->spouses(k).
  std::vector<Vector> coeffs;
};

/// Everything compose() computes on the way, in position coordinates.
struct Composition {
  Matrix sigma;
  /// Strictly lower-triangular matrix of completed coefficient rows.
  Matrix coefficients;
  /// log|Sigma_{sp.nsp}| per position (0 where the spouse set is empty).
  Vector schur_log_det;
  std::size_t completion_solves = 0;
};

/// Membership tolerance for externally supplied matrices.
inline constexpr double kMembershipTolerance = 1e-10;

/// Throws ValidationError if sigma is not positive definite or has an entry
/// above kMembershipTolerance at a pair without a bi-directed edge.
void check_membership(const Matrix& sigma, const Admg& g);

BartlettFactors decompose(const Matrix& sigma, std::shared_ptr<const BartlettLayout> layout);
BartlettFactors decompose(const Matrix& sigma, const SamplingOrder& order, const Admg& g);

Composition compose_ordered(const BartlettFactors& phi);
/// Reconstructed covariance in node coordinates, exact zeros at non-adjacent pairs.
Matrix compose(const BartlettFactors& phi);

/// log|d Sigma / d Phi^E|: sum over positions of log|Sigma_{sp.nsp}|, the
/// Schur complement of the non-spouse block inside the predecessor block.
double jacobian_logdet(const BartlettFactors& phi);

/// sum_k #later_spouses(k) * log gamma_k. Equal to jacobian_logdet() whenever
/// Sigma_{sp,nsp} vanishes at every position (complete graphs, graphs with no
/// position that has both kinds of predecessors), not in general.
double jacobian_logdet_spouse_count(const BartlettFactors& phi);

/// Same quantity as jacobian_logdet(), computed directly from the covariance
/// by forming each Schur complement explicitly.
double jacobian_logdet_from_sigma(const Matrix& sigma, const BartlettLayout& layout);

/// Sigma^-1 = (I - C)^T Gamma^-1 (I - C) in node coordinates, where C is the
/// completed coefficient matrix. No matrix inversion is performed.
Matrix precision_from_composition(const Composition& comp, const Vector& gammas,
                                  const BartlettLayout& layout);

}  // namespace admg
