#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace admg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Cholesky factor of a symmetric positive-definite matrix, or nullopt.
std::optional<Eigen::LLT<Matrix>> try_cholesky(const Matrix& m);

/// Cholesky factor; throws NumericalError naming `what` on failure.
Eigen::LLT<Matrix> cholesky_or_throw(const Matrix& m, const char* what);

bool is_positive_definite(const Matrix& m);

double log_det(const Eigen::LLT<Matrix>& llt);

/// Inverse of an SPD matrix through its Cholesky factor.
Matrix spd_inverse(const Eigen::LLT<Matrix>& llt);

/// One draw from N(mean, covariance) given the Cholesky factor of the
/// covariance and a vector of standard normals.
Vector mvn_from_normals(const Vector& mean, const Eigen::LLT<Matrix>& cov_llt,
                        const Vector& standard_normals);

/// One draw from N(precision^-1 * linear, precision^-1) given the Cholesky
/// factor of the precision (canonical form).
Vector mvn_canonical_from_normals(const Eigen::LLT<Matrix>& precision_llt,
                                  const Vector& linear,
                                  const Vector& standard_normals);

Matrix permute_symmetric(const Matrix& m, std::span<const Index> order);
Matrix unpermute_symmetric(const Matrix& m, std::span<const Index> order);

Matrix symmetrize(const Matrix& m);

}  // namespace admg
