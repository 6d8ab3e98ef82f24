#pragma once

#include <Eigen/Dense>

#include "nuisblue/errors.hpp"

namespace nuisblue {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Relative singular-value cutoff shared by every rank decision in the library.
inline constexpr double kRankTol = 1e-10;

struct RankReport {
  Index rank = 0;
  // Absolute cutoff actually applied: tol * max(rows, cols) * sigma_max.
  double tolerance_used = 0.0;
};

RankReport rank_of(const Matrix& a, double tol = kRankTol);

// Moore-Penrose inverse restricted to full column rank inputs; SVD-based.
// Throws RankDeficient when the numerical rank is below the column count.
Matrix pinv(const Matrix& a);

// Orthonormal basis for the orthogonal complement of col(g), as columns.
// g must be tall (rows > cols) and full column rank.
Matrix null_space_basis(const Matrix& g);

// Inverse symmetric square root of an SPD matrix via eigendecomposition.
// Eigenvalues at or below 1e-12 * lambda_max are treated as a failure, not
// clamped.
Matrix inv_sqrt_sym(const Matrix& s);

// Least squares with a full-column-rank check; QR-based solve.
Vector solve_least_squares(const Matrix& a, const Vector& b);

}  // namespace nuisblue
