#include "admg/linalg.hpp"

#include <string>

#include "admg/error.hpp"

namespace admg {

std::optional<Eigen::LLT<Matrix>> try_cholesky(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return std::nullopt;
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  // LLT reports success on some semidefinite inputs; require a strictly positive diagonal.
  const auto& l = llt.matrixLLT();
  for (Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0)) return std::nullopt;
  }
  return llt;
}

Eigen::LLT<Matrix> cholesky_or_throw(const Matrix& m, const char* what) {
  auto llt = try_cholesky(m);
  if (!llt) throw NumericalError(std::string(what) + " is not positive definite");
  return std::move(*llt);
}

bool is_positive_definite(const Matrix& m) { return try_cholesky(m).has_value(); }

double log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Matrix spd_inverse(const Eigen::LLT<Matrix>& llt) {
  const Index n = llt.matrixLLT().rows();
  return llt.solve(Matrix::Identity(n, n));
}

Vector mvn_from_normals(const Vector& mean, const Eigen::LLT<Matrix>& cov_llt,
                        const Vector& standard_normals) {
  return mean + cov_llt.matrixL() * standard_normals;
}

Vector mvn_canonical_from_normals(const Eigen::LLT<Matrix>& precision_llt, const Vector& linear,
                                  const Vector& standard_normals) {
  // x = P^-1 h + L^-T z, with P = L L^T, has covariance P^-1.
  Vector x = precision_llt.solve(linear);
  x += precision_llt.matrixU().solve(standard_normals);
  return x;
}

Matrix permute_symmetric(const Matrix& m, std::span<const Index> order) {
  const Index n = static_cast<Index>(order.size());
  Matrix out(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) out(a, b) = m(order[a], order[b]);
  }
  return out;
}

Matrix unpermute_symmetric(const Matrix& m, std::span<const Index> order) {
  const Index n = static_cast<Index>(order.size());
  Matrix out(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) out(order[a], order[b]) = m(a, b);
  }
  return out;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace admg
