#include "nuisblue/differencing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "textio.hpp"

namespace nuisblue {

namespace {

std::vector<char> zero_mask(const Vector& g, double zero_tol) {
  std::vector<char> mask(g.size());
  for (Index i = 0; i < g.size(); ++i) {
    mask[i] = std::abs(g(i)) <= zero_tol ? 1 : 0;
  }
  return mask;
}

Index pick_reference(const ReferencePolicy& policy, int step_k,
                     const Vector& g, double zero_tol) {
  switch (policy.mode) {
    case ReferencePolicy::Mode::FIXED: {
      const std::size_t idx = static_cast<std::size_t>(step_k - 1);
      if (idx >= policy.fixed.size()) {
        throw ShapeViolation("build_plan: FIXED policy needs one reference per step");
      }
      return policy.fixed[idx];
    }
    case ReferencePolicy::Mode::FIRST_NONZERO: {
      for (Index i = 0; i < g.size(); ++i) {
        if (std::abs(g(i)) > zero_tol) return i;
      }
      throw TooFewNonZeros("build_plan: nuisance column is all zeros");
    }
    case ReferencePolicy::Mode::LARGEST_MAGNITUDE:
    default: {
      Index best = 0;
      double best_mag = -1.0;
      for (Index i = 0; i < g.size(); ++i) {
        if (std::abs(g(i)) > best_mag) {
          best_mag = std::abs(g(i));
          best = i;
        }
      }
      return best;
    }
  }
}

}  // namespace

Matrix single_ref_operator(Index n, Index j) {
  if (n < 2) throw DegenerateShape("single_ref_operator: need n >= 2");
  if (j < 0 || j >= n) {
    throw IndexOutOfRange("single_ref_operator: reference outside [0, n)");
  }
  Matrix op = Matrix::Zero(n - 1, n);
  Index row = 0;
  for (Index i = 0; i < n; ++i) {
    if (i == j) continue;
    op(row, i) = 1.0;
    op(row, j) = -1.0;
    ++row;
  }
  return op;
}

Matrix average_ref_operator(Index n) {
  if (n < 2) throw DegenerateShape("average_ref_operator: need n >= 2");
  return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
}

EliminationStep eliminate_step(const Vector& d_prev, const Matrix& h_prev,
                               const Matrix& g_cols_prev, Index j,
                               double zero_tol) {
  const Index n = d_prev.size();
  if (n < 2) throw DegenerateShape("eliminate_step: need at least two rows");
  if (h_prev.rows() != n || g_cols_prev.rows() != n) {
    throw ShapeViolation("eliminate_step: row count mismatch");
  }
  if (g_cols_prev.cols() < 1) {
    throw ShapeViolation("eliminate_step: no nuisance column left");
  }
  if (j < 0 || j >= n) {
    throw IndexOutOfRange("eliminate_step: reference outside [0, n)");
  }
  const Vector g = g_cols_prev.col(0);
  const auto zeros = zero_mask(g, zero_tol);
  const Index nonzero_count =
      n - std::accumulate(zeros.begin(), zeros.end(), Index{0},
                          [](Index acc, char z) { return acc + z; });
  if (nonzero_count < 2) {
    throw TooFewNonZeros("eliminate_step: need two rows with |g| > zero_tol");
  }
  if (zeros[j]) {
    throw ReferenceOnZeroRow("eliminate_step: reference row has |g| <= zero_tol");
  }

  Matrix op = Matrix::Zero(n - 1, n);
  Index row = 0;
  for (Index i = 0; i < n; ++i) {
    if (i == j) continue;
    if (zeros[i]) {
      op(row, i) = 1.0;
    } else {
      op(row, i) = 1.0 / g(i);
      op(row, j) = -1.0 / g(j);
    }
    ++row;
  }

  EliminationStep out;
  out.record.reference = j;
  out.record.zero_rows = n - nonzero_count;
  out.record.op = op;
  out.d = op * d_prev;
  out.h = op * h_prev;
  out.g_cols = op * g_cols_prev.rightCols(g_cols_prev.cols() - 1);
  return out;
}

DifferencingPlan build_plan(const LinearNuisanceModel& model,
                            const ReferencePolicy& policy,
                            const std::vector<Index>& order) {
  validate(model);
  const Index n = model.n();
  const Index m = model.m();

  std::vector<Index> perm(order);
  if (perm.empty()) {
    perm.resize(m);
    std::iota(perm.begin(), perm.end(), Index{0});
  } else {
    if (static_cast<Index>(perm.size()) != m) {
      throw ShapeViolation("build_plan: order must list every nuisance column");
    }
    std::vector<char> seen(m, 0);
    for (Index c : perm) {
      if (c < 0 || c >= m || seen[c]) {
        throw ShapeViolation("build_plan: order is not a permutation");
      }
      seen[c] = 1;
    }
  }

  Matrix g_cols(n, m);
  for (Index t = 0; t < m; ++t) g_cols.col(t) = model.G.col(perm[t]);

  DifferencingPlan plan;
  Vector d = model.y;
  Matrix h = model.H;
  Matrix total = Matrix::Identity(n, n);
  for (int k = 1; k <= m; ++k) {
    const Vector g = g_cols.col(0);
    const double zero_tol = 1e-12 * g.cwiseAbs().maxCoeff();
    const Index j = pick_reference(policy, k, g, zero_tol);
    EliminationStep step = eliminate_step(d, h, g_cols, j, zero_tol);
    step.record.k = k;
    total = step.record.op * total;
    d = std::move(step.d);
    h = std::move(step.h);
    g_cols = std::move(step.g_cols);
    plan.steps.push_back(std::move(step.record));
  }

  if (m > 0) {
    // Internal consistency: the product must cancel every nuisance column.
    const double scale = std::max(1.0, model.G.cwiseAbs().maxCoeff());
    if ((total * model.G).cwiseAbs().maxCoeff() > 1e-8 * scale) {
      throw Error("build_plan: elimination failed to cancel G");
    }
    // (total total^T)^{-1/2} total, computed as the orthogonal polar factor
    // of total; algebraically identical, but it avoids squaring the
    // condition number.
    Eigen::BDCSVD<Matrix> svd(total,
                              Eigen::ComputeThinU | Eigen::ComputeThinV);
    plan.whitener = svd.matrixU() * svd.matrixV().transpose();
  } else {
    plan.whitener = total;
  }
  plan.total = std::move(total);
  return plan;
}

namespace {

EstimateReport reduced_ls(const Matrix& op, const LinearNuisanceModel& model,
                          Method method, const char* who) {
  const Matrix design = op * model.H;
  if (design.rows() < design.cols() ||
      rank_of(design).rank < design.cols()) {
    throw RankViolation(std::string(who) + ": differenced H rank-deficient");
  }
  EstimateReport report;
  report.x_hat = design.colPivHouseholderQr().solve(op * model.y);
  report.method = method;
  report.residual_norm = (op * model.y - design * report.x_hat).norm();
  return report;
}

}  // namespace

EstimateReport differential_estimate(const LinearNuisanceModel& model,
                                     const DifferencingPlan& plan) {
  validate(model);
  if (plan.whitener.cols() != model.n()) {
    throw ShapeViolation("differential_estimate: plan built for another N");
  }
  return reduced_ls(plan.whitener, model, Method::DIFF,
                    "differential_estimate");
}

EstimateReport differential_estimate_unwhitened(
    const LinearNuisanceModel& model, const DifferencingPlan& plan) {
  validate(model);
  if (plan.total.cols() != model.n()) {
    throw ShapeViolation(
        "differential_estimate_unwhitened: plan built for another N");
  }
  return reduced_ls(plan.total, model, Method::DIFF_UNWHITENED,
                    "differential_estimate_unwhitened");
}

namespace {

void dump_matrix(std::ostringstream& out, const Matrix& a) {
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out << (j ? " " : "") << textio::fmt_sig(a(i, j), 17);
    }
    out << '\n';
  }
}

}  // namespace

std::string plan_dump(const DifferencingPlan& plan) {
  std::ostringstream out;
  out << "steps " << plan.steps.size() << '\n';
  for (const StepRecord& step : plan.steps) {
    out << "step " << step.k << " reference " << step.reference
        << " zero_rows " << step.zero_rows << " rows " << step.op.rows()
        << " cols " << step.op.cols() << '\n';
    dump_matrix(out, step.op);
  }
  out << "total rows " << plan.total.rows() << " cols " << plan.total.cols()
      << '\n';
  dump_matrix(out, plan.total);
  out << "whitener rows " << plan.whitener.rows() << " cols "
      << plan.whitener.cols() << '\n';
  dump_matrix(out, plan.whitener);
  return out.str();
}

}  // namespace nuisblue
