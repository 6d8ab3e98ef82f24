#pragma once

#include "nuisblue/linmodel.hpp"

namespace nuisblue {

struct OspArtifacts {
  // Orthogonal projector onto the complement of col(G); N x N, symmetric,
  // idempotent, annihilates G.
  Matrix projector;
  // Orthonormal basis of that complement; N x (N - M).  The basis is unique
  // only up to rotation, so compare through basis * basis^T.
  Matrix basis;
};

OspArtifacts osp_artifacts(const Matrix& g);

// Joint least squares over [x; u].  The only method that reports u_hat.
EstimateReport joint_ls(const LinearNuisanceModel& model);

// Projection form: least squares of P y on P H.
EstimateReport osp_estimate_type1(const LinearNuisanceModel& model);

// Reduced form: least squares of U_n^T y on U_n^T H.
EstimateReport osp_estimate_type2(const LinearNuisanceModel& model);

// Covariance of the x estimate common to all the unbiased methods here:
// sigma^2 (H^T P H)^{-1}.
Matrix blue_covariance(const LinearNuisanceModel& model);

}  // namespace nuisblue
