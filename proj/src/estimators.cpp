#include "nuisblue/estimators.hpp"

namespace nuisblue {

namespace {

// Rank gate for the reduced design matrix each method solves against.
void require_estimable(const Matrix& design, const char* who) {
  if (design.rows() < design.cols() ||
      rank_of(design).rank < design.cols()) {
    throw RankViolation(std::string(who) + ": design matrix rank-deficient");
  }
}

EstimateReport solve_reduced(const Matrix& design, const Vector& rhs,
                             Method method, const char* who) {
  require_estimable(design, who);
  EstimateReport report;
  report.x_hat = design.colPivHouseholderQr().solve(rhs);
  report.method = method;
  report.residual_norm = (rhs - design * report.x_hat).norm();
  return report;
}

}  // namespace

OspArtifacts osp_artifacts(const Matrix& g) {
  if (g.rows() < 1 || g.cols() < 1) {
    throw DegenerateShape("osp_artifacts: empty G");
  }
  OspArtifacts art;
  art.basis = null_space_basis(g);  // checks shape and rank
  art.projector = Matrix::Identity(g.rows(), g.rows()) - g * pinv(g);
  art.projector = 0.5 * (art.projector + art.projector.transpose());
  return art;
}

EstimateReport joint_ls(const LinearNuisanceModel& model) {
  validate(model);
  const Index n = model.n();
  const Index l = model.l();
  const Index m = model.m();
  Matrix stacked(n, l + m);
  stacked.leftCols(l) = model.H;
  if (m > 0) stacked.rightCols(m) = model.G;
  require_estimable(stacked, "joint_ls");
  const Vector theta = stacked.colPivHouseholderQr().solve(model.y);
  EstimateReport report;
  report.x_hat = theta.head(l);
  report.u_hat = Vector(theta.tail(m));
  report.method = Method::JLS;
  report.residual_norm = (model.y - stacked * theta).norm();
  return report;
}

EstimateReport osp_estimate_type1(const LinearNuisanceModel& model) {
  validate(model);
  if (model.m() == 0) {
    return solve_reduced(model.H, model.y, Method::OSP1, "osp_estimate_type1");
  }
  const OspArtifacts art = osp_artifacts(model.G);
  return solve_reduced(art.projector * model.H, art.projector * model.y,
                       Method::OSP1, "osp_estimate_type1");
}

EstimateReport osp_estimate_type2(const LinearNuisanceModel& model) {
  validate(model);
  if (model.m() == 0) {
    return solve_reduced(model.H, model.y, Method::OSP2, "osp_estimate_type2");
  }
  const OspArtifacts art = osp_artifacts(model.G);
  return solve_reduced(art.basis.transpose() * model.H,
                       art.basis.transpose() * model.y, Method::OSP2,
                       "osp_estimate_type2");
}

Matrix blue_covariance(const LinearNuisanceModel& model) {
  validate(model);
  Matrix ph = model.H;
  if (model.m() > 0) {
    ph = osp_artifacts(model.G).projector * model.H;
  }
  const Matrix info = model.H.transpose() * ph;
  if (rank_of(info).rank < model.l()) {
    throw RankViolation("blue_covariance: information matrix singular");
  }
  const Matrix cov = model.sigma * model.sigma * info.inverse();
  return 0.5 * (cov + cov.transpose());
}

}  // namespace nuisblue
