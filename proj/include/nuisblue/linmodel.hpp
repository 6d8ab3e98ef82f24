#pragma once

#include <optional>
#include <string>

#include "nuisblue/matkernel.hpp"

namespace nuisblue {

// Observation model y = H x + G u + n with x the wanted parameters, u the
// nuisance parameters, and n zero-mean white noise with standard deviation
// sigma.  G may have zero columns (no nuisance), but its row count must
// still match y.
struct LinearNuisanceModel {
  Vector y;
  Matrix H;
  Matrix G;
  double sigma = 1.0;

  Index n() const { return y.size(); }
  Index l() const { return H.cols(); }
  Index m() const { return G.cols(); }
};

enum class Method { JLS, OSP1, OSP2, DIFF, DIFF_UNWHITENED };

struct EstimateReport {
  Vector x_hat;
  // Present only for the joint method; holds the nuisance estimate.
  std::optional<Vector> u_hat;
  Method method = Method::JLS;
  // Norm of the residual of the least-squares problem the method solved.
  double residual_norm = 0.0;
};

// Shape, finiteness, sigma > 0, N > L, N > M, N >= L + M, and
// rank([H G]) == L + M.  Returns its argument so call sites can chain.
const LinearNuisanceModel& validate(const LinearNuisanceModel& model);

// Applies cov^{-1/2} to y, H, and G.  cov is accepted up to positive scale;
// sigma is carried over unchanged.
LinearNuisanceModel whiten(const LinearNuisanceModel& model, const Matrix& cov);

// Plain text round-trip format:
//   line 1: N L M sigma
//   line 2: the N entries of y
//   then N rows of H (L entries each) and N rows of G (M entries each).
// Values are written with 17 significant digits so that
// model_from_text(model_to_text(m)) reproduces m bit for bit.
std::string model_to_text(const LinearNuisanceModel& model);
LinearNuisanceModel model_from_text(const std::string& text);

void save_model(const LinearNuisanceModel& model, const std::string& path);
LinearNuisanceModel load_model(const std::string& path);

}  // namespace nuisblue
