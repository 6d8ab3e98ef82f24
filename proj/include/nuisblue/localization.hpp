#pragma once

#include <string>

#include "nuisblue/linmodel.hpp"
#include "nuisblue/rng.hpp"

namespace nuisblue {

// A 2-D or 3-D single-source scene.  Distances are in meters, powers in dBm,
// and the range offset r0 is the clock-bias term expressed as a distance.
struct LocScene {
  int dim = 2;
  Matrix anchors;  // N x dim, one sensor per row
  Vector target;   // dim
  double r0 = 0.0;
  double p0 = 0.0;      // received power at 1 m [dBm]
  double gamma = 2.0;   // path-loss exponent
  double sigma = 1.0;   // noise std: meters for range data, dB for power data
};

enum class ModelLabel { TSE_TOA, SD_TOA, SD_TDOA, SD_RSS };
std::string_view model_name(ModelLabel label);

// Built linear model plus the rule for pulling the position out of x_hat.
struct BuiltLinearModel {
  LinearNuisanceModel model;
  ModelLabel label = ModelLabel::TSE_TOA;
  Index position_dim = 2;

  Vector extract_position(const Vector& x_hat) const {
    if (x_hat.size() < position_dim) {
      throw ShapeViolation("extract_position: estimate too short");
    }
    return x_hat.head(position_dim);
  }
};

// dim in {2, 3}, enough distinct anchors, target off every anchor,
// sigma >= 0 and everything finite.  Returns its argument.
const LocScene& validate_scene(const LocScene& scene);

Vector ranges_from(const Matrix& anchors, const Vector& point);
Vector ranges(const LocScene& scene);  // anchor-to-target

// Biased range observations d_i = r_i + r0 + sigma * noise.
Vector simulate_toa(const LocScene& scene, Rng& rng);

// Log-distance power observations P_i = p0 - 10 gamma log10(r_i) + sigma * noise.
Vector simulate_rss(const LocScene& scene, Rng& rng);

// First-order expansion of the ranges about x_prev; the scalar nuisance is
// the range offset and the model is already white.
BuiltLinearModel build_tse(const Vector& d, const Matrix& anchors,
                           const Vector& x_prev, double sigma);

// Squared-difference range model, x = target position, u = the two offset
// nuisances.  whiten_ranges scales the rows (the evaluation uses the true
// ranges); pass whitened = false for the raw model.
BuiltLinearModel build_sd_toa(const Vector& d, const Matrix& anchors,
                              const Vector& whiten_ranges, double sigma,
                              bool whitened = true);

// Same construction after differencing against reference row ref_j
// (0-based); u = the reference range.
BuiltLinearModel build_sd_tdoa(const Vector& d, const Matrix& anchors,
                               Index ref_j, const Vector& whiten_ranges,
                               double sigma, bool whitened = true);

// Squared-range model from powers, x = [position; squared norm of position],
// u = the transformed reference power.
BuiltLinearModel build_sd_rss(const Vector& p, const Matrix& anchors,
                              double gamma, double sigma,
                              bool whitened = true);

// Trace of the position block of the CRLB for the corresponding
// observation model, in m^2.
double crlb_toa(const LocScene& scene);
double crlb_rss(const LocScene& scene);

// Scene text format:
//   line 1: dim N
//   N anchor rows, then the target row (dim entries each)
//   then key=value lines for r0, p0, gamma, sigma.
std::string scene_to_text(const LocScene& scene);
LocScene scene_from_text(const std::string& text);
void save_scene(const LocScene& scene, const std::string& path);
LocScene load_scene(const std::string& path);

}  // namespace nuisblue
