#pragma once

#include <vector>

#include "nuisblue/linmodel.hpp"

namespace nuisblue {

// How each elimination step picks its reference row.  All choices lead to
// the same whitened estimate; FIXED exists so tests and traces can pin the
// construction down exactly.
struct ReferencePolicy {
  enum class Mode { FIXED, FIRST_NONZERO, LARGEST_MAGNITUDE };

  Mode mode = Mode::LARGEST_MAGNITUDE;
  // One 0-based reference per step, consumed in step order; FIXED only.
  std::vector<Index> fixed;

  static ReferencePolicy fixed_refs(std::vector<Index> refs) {
    return {Mode::FIXED, std::move(refs)};
  }
  static ReferencePolicy first_nonzero() { return {Mode::FIRST_NONZERO, {}}; }
  static ReferencePolicy largest_magnitude() {
    return {Mode::LARGEST_MAGNITUDE, {}};
  }
};

struct StepRecord {
  int k = 0;            // 1-based step number
  Index reference = 0;  // 0-based row index within the step's input
  Index zero_rows = 0;  // rows passed through untouched by this step
  Matrix op;            // (n-1) x n elimination operator
};

struct DifferencingPlan {
  std::vector<StepRecord> steps;
  // Product of the step operators, (N - M) x N; annihilates G.
  Matrix total;
  // (total total^T)^{-1/2} total.  Satisfies whitener^T whitener ==
  // projector onto the complement of col(G).
  Matrix whitener;
};

// Classic single-difference operator: subtract row j from every other row.
Matrix single_ref_operator(Index n, Index j);

// Subtract the row mean from every row; rank N - 1, kept for comparison
// tests (it cannot be a step of a plan).
Matrix average_ref_operator(Index n);

// One elimination step.  g_cols' first column is the nuisance direction to
// cancel; j is the reference row, which must exceed zero_tol in magnitude.
// Rows with |g| <= zero_tol pass through unscaled; every other row i != j
// becomes row_i / g_i - row_j / g_j.  Returns the operator applied to all
// inputs, with the consumed column dropped.
struct EliminationStep {
  StepRecord record;
  Vector d;
  Matrix h;
  Matrix g_cols;
};
EliminationStep eliminate_step(const Vector& d_prev, const Matrix& h_prev,
                               const Matrix& g_cols_prev, Index j,
                               double zero_tol);

// Runs M elimination steps over the model's nuisance columns.  `order`
// permutes the columns (empty = natural order); the resulting estimate is
// invariant to it, the recorded steps are not.  Per-step zero tolerance is
// 1e-12 times the largest |g| of the step's column.
DifferencingPlan build_plan(const LinearNuisanceModel& model,
                            const ReferencePolicy& policy = {},
                            const std::vector<Index>& order = {});

// BLUE from the differenced data: least squares of (whitener y) on
// (whitener H).
EstimateReport differential_estimate(const LinearNuisanceModel& model,
                                     const DifferencingPlan& plan);

// Least squares on the raw differenced data (total, not whitener).  Biased
// weighting, kept as a baseline; reference choices matter here.
EstimateReport differential_estimate_unwhitened(
    const LinearNuisanceModel& model, const DifferencingPlan& plan);

// Step-by-step text trace of a plan, 17 significant digits.
std::string plan_dump(const DifferencingPlan& plan);

}  // namespace nuisblue
