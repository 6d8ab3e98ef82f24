#include "nuisblue/matkernel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <string>

namespace nuisblue {

namespace {

void require_nonempty(const Matrix& a, const char* who) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw DegenerateShape(std::string(who) + ": empty matrix");
  }
}

double sv_cutoff(const Matrix& a, const Vector& singular_values, double tol) {
  const double scale =
      singular_values.size() > 0 ? singular_values(0) : 0.0;
  return tol * static_cast<double>(std::max(a.rows(), a.cols())) * scale;
}

}  // namespace

RankReport rank_of(const Matrix& a, double tol) {
  if (a.rows() == 0 || a.cols() == 0) return {0, 0.0};
  Eigen::BDCSVD<Matrix> svd(a);
  const Vector sv = svd.singularValues();
  const double cutoff = sv_cutoff(a, sv, tol);
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  return {rank, cutoff};
}

Matrix pinv(const Matrix& a) {
  require_nonempty(a, "pinv");
  if (a.rows() < a.cols()) {
    throw RankDeficient("pinv: fewer rows than columns");
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  const double cutoff = sv_cutoff(a, sv, kRankTol);
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) <= cutoff) {
      throw RankDeficient("pinv: numerical rank below column count");
    }
  }
  return svd.matrixV() * sv.cwiseInverse().asDiagonal() *
         svd.matrixU().transpose();
}

Matrix null_space_basis(const Matrix& g) {
  require_nonempty(g, "null_space_basis");
  if (g.rows() <= g.cols()) {
    throw DegenerateShape("null_space_basis: need more rows than columns");
  }
  Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeFullU);
  const Vector sv = svd.singularValues();
  const double cutoff = sv_cutoff(g, sv, kRankTol);
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) <= cutoff) {
      throw RankDeficient("null_space_basis: input not full column rank");
    }
  }
  return svd.matrixU().rightCols(g.rows() - g.cols());
}

Matrix inv_sqrt_sym(const Matrix& s) {
  require_nonempty(s, "inv_sqrt_sym");
  if (s.rows() != s.cols()) {
    throw DegenerateShape("inv_sqrt_sym: matrix not square");
  }
  const double scale = s.cwiseAbs().maxCoeff();
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, scale)) {
    throw NotSPD("inv_sqrt_sym: matrix not symmetric");
  }
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw NotSPD("inv_sqrt_sym: eigendecomposition failed");
  }
  const Vector lam = es.eigenvalues();
  const double lam_max = lam.maxCoeff();
  if (lam_max <= 0.0) {
    throw NotSPD("inv_sqrt_sym: matrix not positive definite");
  }
  const double floor = 1e-12 * lam_max;
  if (lam.minCoeff() <= floor) {
    throw NotSPD("inv_sqrt_sym: eigenvalue at or below floor");
  }
  const Matrix w = es.eigenvectors() *
                   lam.array().rsqrt().matrix().asDiagonal() *
                   es.eigenvectors().transpose();
  return 0.5 * (w + w.transpose());
}

Vector solve_least_squares(const Matrix& a, const Vector& b) {
  require_nonempty(a, "solve_least_squares");
  if (b.size() != a.rows()) {
    throw DegenerateShape("solve_least_squares: rhs length mismatch");
  }
  if (a.rows() < a.cols() || rank_of(a).rank < a.cols()) {
    throw RankDeficient("solve_least_squares: matrix not full column rank");
  }
  return a.colPivHouseholderQr().solve(b);
}

}  // namespace nuisblue
