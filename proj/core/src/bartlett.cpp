#include "admg/bartlett.hpp"

#include <cmath>

#include "admg/error.hpp"

namespace admg {

Theta Theta::zeros(std::size_t q) {
  const Index n = static_cast<Index>(q);
  return {Matrix::Zero(n, n), Matrix::Zero(n, n), Vector::Zero(n)};
}

namespace {

Eigen::PartialPivLU<Matrix> i_minus_b(const Matrix& b) {
  return Eigen::PartialPivLU<Matrix>(Matrix::Identity(b.rows(), b.cols()) - b);
}

}  // namespace

Matrix implied_covariance(const Theta& theta) {
  const auto lu = i_minus_b(theta.B);
  const Matrix left = lu.solve(theta.V);                         // (I-B)^-1 V
  return symmetrize(lu.solve(left.transpose()).transpose());     // ((I-B)^-1 (..)^T)^T
}

Vector implied_mean(const Theta& theta) {
  if (theta.mean.size() == 0) return Vector::Zero(theta.B.rows());
  return i_minus_b(theta.B).solve(theta.mean);
}

BartlettLayout::BartlettLayout(const Admg& g, SamplingOrder order) : order_(std::move(order)) {
  const std::size_t q = order_.size();
  if (q != g.size()) throw ValidationError("sampling order size does not match the graph");
  permutation_.resize(q);
  spouses_.resize(q);
  non_spouses_.resize(q);
  later_spouses_.assign(q, 0);
  adjacent_.assign(q * q, 0);
  for (std::size_t k = 0; k < q; ++k) permutation_[k] = static_cast<Index>(order_.at(k));
  for (std::size_t a = 0; a < q; ++a) {
    for (std::size_t b = 0; b < q; ++b) {
      if (a != b && g.has_bidirected(order_.at(a), order_.at(b))) adjacent_[a * q + b] = 1;
    }
  }
  for (std::size_t k = 0; k < q; ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      if (adjacent(k, j)) {
        spouses_[k].push_back(static_cast<Index>(j));
        ++later_spouses_[j];
      } else {
        non_spouses_[k].push_back(static_cast<Index>(j));
      }
    }
  }
}

bool BartlettLayout::adjacent(std::size_t pa, std::size_t pb) const {
  return adjacent_[pa * size() + pb] != 0;
}

std::shared_ptr<const BartlettLayout> make_layout(const Admg& g, const SamplingOrder& order) {
  return std::make_shared<const BartlettLayout>(g, order);
}

void check_membership(const Matrix& sigma, const Admg& g) {
  const Index q = static_cast<Index>(g.size());
  if (sigma.rows() != q || sigma.cols() != q) throw ValidationError("covariance has the wrong dimension");
  if (!is_positive_definite(sigma)) throw ValidationError("covariance is not positive definite");
  for (Index i = 0; i < q; ++i) {
    for (Index j = 0; j < i; ++j) {
      const bool edge = g.has_bidirected(static_cast<NodeIndex>(i), static_cast<NodeIndex>(j));
      if (!edge && (std::fabs(sigma(i, j)) > kMembershipTolerance ||
                    std::fabs(sigma(j, i)) > kMembershipTolerance)) {
        throw ValidationError("covariance has a nonzero entry at non-adjacent pair (" + g.name(i) + ", " +
                              g.name(j) + ")");
      }
    }
  }
}

BartlettFactors decompose(const Matrix& sigma, std::shared_ptr<const BartlettLayout> layout) {
  const std::size_t q = layout->size();
  if (static_cast<std::size_t>(sigma.rows()) != q || sigma.rows() != sigma.cols()) {
    throw ValidationError("covariance has the wrong dimension");
  }
  const Matrix ordered = permute_symmetric(sigma, layout->permutation());
  for (std::size_t a = 0; a < q; ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      if (!layout->adjacent(a, b) && std::fabs(ordered(static_cast<Index>(a), static_cast<Index>(b))) >
                                         kMembershipTolerance) {
        throw ValidationError("covariance is outside M+(G): nonzero entry at a non-adjacent pair");
      }
    }
  }
  const auto llt = try_cholesky(ordered);
  if (!llt) throw ValidationError("covariance is not positive definite");

  // Sigma = T Gamma T^T with T unit lower-triangular; the Bartlett rows are I - T^-1.
  const Matrix l = llt->matrixL();
  const Vector d = l.diagonal();
  const Matrix t = l * d.cwiseInverse().asDiagonal();
  const Matrix t_inv = t.triangularView<Eigen::UnitLower>().solve(Matrix::Identity(static_cast<Index>(q), static_cast<Index>(q)));

  BartlettFactors phi;
  phi.layout = std::move(layout);
  phi.gammas = d.cwiseAbs2();
  phi.coeffs.resize(q);
  for (std::size_t k = 0; k < q; ++k) {
    const auto& sp = phi.layout->spouses(k);
    Vector c(static_cast<Index>(sp.size()));
    for (std::size_t s = 0; s < sp.size(); ++s) c(static_cast<Index>(s)) = -t_inv(static_cast<Index>(k), sp[s]);
    phi.coeffs[k] = std::move(c);
  }
  return phi;
}

BartlettFactors decompose(const Matrix& sigma, const SamplingOrder& order, const Admg& g) {
  return decompose(sigma, make_layout(g, order));
}

Composition compose_ordered(const BartlettFactors& phi) {
  const BartlettLayout& layout = *phi.layout;
  const Index q = static_cast<Index>(layout.size());
  if (phi.gammas.size() != q || static_cast<Index>(phi.coeffs.size()) != q) {
    throw ValidationError("Bartlett factors do not match the layout");
  }
  Composition out;
  out.sigma = Matrix::Zero(q, q);
  out.coefficients = Matrix::Zero(q, q);
  out.schur_log_det = Vector::Zero(q);
  double log_gamma_prefix = 0.0;
  for (Index k = 0; k < q; ++k) {
    const auto& sp = layout.spouses(static_cast<std::size_t>(k));
    const auto& nsp = layout.non_spouses(static_cast<std::size_t>(k));
    const Vector& c = phi.coeffs[static_cast<std::size_t>(k)];
    if (static_cast<std::size_t>(c.size()) != sp.size() || !(phi.gammas(k) > 0.0)) {
      throw ValidationError("invalid Bartlett factors at position " + std::to_string(k));
    }
    if (!sp.empty()) {
      Vector row = Vector::Zero(k);
      row(sp) = c;
      double log_det_nsp = 0.0;
      if (!nsp.empty()) {
        const Matrix s_nn = out.sigma(nsp, nsp);
        const auto llt = cholesky_or_throw(s_nn, "non-spouse covariance block");
        row(nsp) = -llt.solve(out.sigma(nsp, sp) * c);
        log_det_nsp = log_det(llt);
        ++out.completion_solves;
      }
      out.schur_log_det(k) = log_gamma_prefix - log_det_nsp;
      Vector cross = out.sigma.topLeftCorner(k, k) * row;
      cross(nsp).setZero();
      out.sigma.block(k, 0, 1, k) = cross.transpose();
      out.sigma.block(0, k, k, 1) = cross;
      out.sigma(k, k) = phi.gammas(k) + cross.dot(row);
      out.coefficients.block(k, 0, 1, k) = row.transpose();
    } else {
      out.sigma(k, k) = phi.gammas(k);
    }
    log_gamma_prefix += std::log(phi.gammas(k));
  }
  return out;
}

Matrix compose(const BartlettFactors& phi) {
  return unpermute_symmetric(compose_ordered(phi).sigma, phi.layout->permutation());
}

double jacobian_logdet(const BartlettFactors& phi) { return compose_ordered(phi).schur_log_det.sum(); }

double jacobian_logdet_spouse_count(const BartlettFactors& phi) {
  double s = 0.0;
  for (std::size_t k = 0; k < phi.layout->size(); ++k) {
    s += static_cast<double>(phi.layout->later_spouses(k)) * std::log(phi.gammas(static_cast<Index>(k)));
  }
  return s;
}

double jacobian_logdet_from_sigma(const Matrix& sigma, const BartlettLayout& layout) {
  const Matrix ordered = permute_symmetric(sigma, layout.permutation());
  double s = 0.0;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& sp = layout.spouses(k);
    const auto& nsp = layout.non_spouses(k);
    if (sp.empty()) continue;
    Matrix schur = ordered(sp, sp);
    if (!nsp.empty()) {
      const auto llt = cholesky_or_throw(ordered(nsp, nsp), "non-spouse covariance block");
      schur -= ordered(sp, nsp) * llt.solve(ordered(nsp, sp));
    }
    s += log_det(cholesky_or_throw(schur, "spouse Schur complement"));
  }
  return s;
}

Matrix precision_from_composition(const Composition& comp, const Vector& gammas,
                                  const BartlettLayout& layout) {
  const Index q = comp.coefficients.rows();
  const Matrix i_minus_c = Matrix::Identity(q, q) - comp.coefficients;
  const Matrix ordered = i_minus_c.transpose() * gammas.cwiseInverse().asDiagonal() * i_minus_c;
  return unpermute_symmetric(ordered, layout.permutation());
}

}  // namespace admg
