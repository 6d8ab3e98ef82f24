#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nuisblue/localization.hpp"

namespace nuisblue {

// Estimator roster.  The suffix names the observation model, the prefix the
// estimation route: J = joint, OSP = projection, D = differencing, and -LS
// marks the unweighted baselines.
enum class EstimatorTag {
  J_BLUE_TSE_TOA,
  OSP_BLUE_TSE_TOA,
  D_BLUE_TSE_TOA,
  D_LS_TSE_TOA,
  J_LS_SD_TOA,
  J_BLUE_SD_TOA,
  OSP_BLUE_SD_TOA,
  D_BLUE_SD_TOA,
  J_LS_SD_TDOA,
  J_BLUE_SD_TDOA,
  OSP_BLUE_SD_TDOA,
  D_BLUE_SD_TDOA,
  J_LS_SD_RSS,
  J_BLUE_SD_RSS,
  OSP_BLUE_SD_RSS,
  D_LS_SD_RSS,
  D_BLUE_SD_RSS,
};

inline constexpr int kEstimatorTagCount = 17;

std::string_view tag_name(EstimatorTag tag);
std::optional<EstimatorTag> tag_from_name(std::string_view name);
ModelLabel tag_model(EstimatorTag tag);
std::vector<EstimatorTag> all_tags();

struct CampaignConfig {
  LocScene scene;  // geometry template; scene.sigma is ignored here

  enum class Placement { FIXED, UNIFORM };
  // FIXED keeps scene.target; UNIFORM draws it uniformly over
  // [field_min, field_max]^dim, by default independently per trial.
  Placement placement = Placement::UNIFORM;
  double field_min = 0.0;
  double field_max = 50.0;
  bool redraw_per_trial = true;

  std::vector<double> sigma_grid;  // positive, one RMSE row per entry
  int trials = 1000;
  std::uint64_t seed = 1;
  std::vector<EstimatorTag> estimators;

  int tse_iterations = 1;
  Index sd_tdoa_ref = 0;
  // Whiten the squared-difference models with the true ranges (the
  // evaluation choice); false re-whitens from the initial estimate.
  bool true_whitening = true;
};

struct TrialOutcome {
  // squared position error, [sigma index][estimator index]; NaN = excluded
  std::vector<std::vector<double>> sq_err;
  // CRLB position traces per sigma; zero-length when no tag needs them
  std::vector<double> crlb_toa_trace;
  std::vector<double> crlb_rss_trace;
};

struct CampaignRow {
  ModelLabel model = ModelLabel::TSE_TOA;
  EstimatorTag estimator = EstimatorTag::J_BLUE_TSE_TOA;
  double sigma = 0.0;
  double rmse = 0.0;
  double crlb_rmse = 0.0;
  int trials = 0;
  int excluded = 0;
  std::uint64_t seed = 0;
};

struct CampaignResult {
  std::vector<CampaignRow> rows;
};

// One Monte Carlo trial.  Every estimator sees the identical noise
// realization per sigma; the stream is keyed on (seed, trial, sigma index)
// so the outcome is a pure function of config and trial index.
TrialOutcome run_trial(const CampaignConfig& config, int trial_index);

CampaignResult run_campaign(const CampaignConfig& config);

// Root mean square over the non-excluded entries, accumulated with
// compensated summation in input order.  NaN when everything is excluded;
// an empty vector is a caller error.
double rmse_of(const std::vector<double>& squared_errors);

// Header 'model,estimator,sigma,rmse,crlb_rmse,trials,excluded,seed'; 12
// significant digits; rows in result order.
std::string campaign_csv(const CampaignResult& result);

}  // namespace nuisblue
