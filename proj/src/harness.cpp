#include "nuisblue/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nuisblue/differencing.hpp"
#include "nuisblue/estimators.hpp"
#include "textio.hpp"

namespace nuisblue {

namespace {

constexpr std::uint64_t kTargetStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

struct TagEntry {
  EstimatorTag tag;
  ModelLabel model;
  const char* name;
};

constexpr TagEntry kTagTable[kEstimatorTagCount] = {
    {EstimatorTag::J_BLUE_TSE_TOA, ModelLabel::TSE_TOA, "J-BLUE-TSE-TOA"},
    {EstimatorTag::OSP_BLUE_TSE_TOA, ModelLabel::TSE_TOA, "OSP-BLUE-TSE-TOA"},
    {EstimatorTag::D_BLUE_TSE_TOA, ModelLabel::TSE_TOA, "D-BLUE-TSE-TOA"},
    {EstimatorTag::D_LS_TSE_TOA, ModelLabel::TSE_TOA, "D-LS-TSE-TOA"},
    {EstimatorTag::J_LS_SD_TOA, ModelLabel::SD_TOA, "J-LS-SD-TOA"},
    {EstimatorTag::J_BLUE_SD_TOA, ModelLabel::SD_TOA, "J-BLUE-SD-TOA"},
    {EstimatorTag::OSP_BLUE_SD_TOA, ModelLabel::SD_TOA, "OSP-BLUE-SD-TOA"},
    {EstimatorTag::D_BLUE_SD_TOA, ModelLabel::SD_TOA, "D-BLUE-SD-TOA"},
    {EstimatorTag::J_LS_SD_TDOA, ModelLabel::SD_TDOA, "J-LS-SD-TDOA"},
    {EstimatorTag::J_BLUE_SD_TDOA, ModelLabel::SD_TDOA, "J-BLUE-SD-TDOA"},
    {EstimatorTag::OSP_BLUE_SD_TDOA, ModelLabel::SD_TDOA,
     "OSP-BLUE-SD-TDOA"},
    {EstimatorTag::D_BLUE_SD_TDOA, ModelLabel::SD_TDOA, "D-BLUE-SD-TDOA"},
    {EstimatorTag::J_LS_SD_RSS, ModelLabel::SD_RSS, "J-LS-SD-RSS"},
    {EstimatorTag::J_BLUE_SD_RSS, ModelLabel::SD_RSS, "J-BLUE-SD-RSS"},
    {EstimatorTag::OSP_BLUE_SD_RSS, ModelLabel::SD_RSS, "OSP-BLUE-SD-RSS"},
    {EstimatorTag::D_LS_SD_RSS, ModelLabel::SD_RSS, "D-LS-SD-RSS"},
    {EstimatorTag::D_BLUE_SD_RSS, ModelLabel::SD_RSS, "D-BLUE-SD-RSS"},
};

const TagEntry& entry_of(EstimatorTag tag) {
  for (const TagEntry& e : kTagTable) {
    if (e.tag == tag) return e;
  }
  throw Error("unknown estimator tag");
}

struct Kahan {
  double sum = 0.0;
  double comp = 0.0;
  long n = 0;

  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    ++n;
  }
  double mean() const {
    return n > 0 ? sum / static_cast<double>(n)
                 : std::numeric_limits<double>::quiet_NaN();
  }
};

void validate_config(const CampaignConfig& config) {
  if (config.trials < 1) throw ShapeViolation("campaign: trials must be >= 1");
  if (config.sigma_grid.empty()) {
    throw EmptyInput("campaign: sigma grid is empty");
  }
  for (double s : config.sigma_grid) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ShapeViolation("campaign: sigma grid entries must be positive");
    }
  }
  if (config.estimators.empty()) {
    throw EmptyInput("campaign: no estimators selected");
  }
  if (config.tse_iterations < 1) {
    throw ShapeViolation("campaign: tse_iterations must be >= 1");
  }
  if (config.sd_tdoa_ref < 0 ||
      config.sd_tdoa_ref >= config.scene.anchors.rows()) {
    throw IndexOutOfRange("campaign: sd_tdoa_ref outside anchor range");
  }
  if (config.placement == CampaignConfig::Placement::UNIFORM &&
      !(config.field_max > config.field_min)) {
    throw ShapeViolation("campaign: empty placement field");
  }
  if (config.placement == CampaignConfig::Placement::FIXED) {
    validate_scene(config.scene);
  } else {
    // Target is drawn per trial; check the fixed geometry via a probe
    // placement strictly inside the field.
    LocScene probe = config.scene;
    probe.target = Vector::Constant(
        probe.dim, config.field_min + 0.37 * (config.field_max - config.field_min));
    try {
      validate_scene(probe);
    } catch (const TargetOnAnchor&) {
      // Probe happened to sit on an anchor; geometry itself is fine.
    }
  }
}

Vector draw_target(const CampaignConfig& config, int trial_index) {
  const std::uint64_t key =
      config.redraw_per_trial ? static_cast<std::uint64_t>(trial_index) : 0u;
  Rng rng = Rng::derive(config.seed, {kTargetStream, key});
  const double scale =
      std::max(1.0, config.scene.anchors.cwiseAbs().maxCoeff());
  Vector target(config.scene.dim);
  for (int attempt = 0; attempt < 128; ++attempt) {
    for (int c = 0; c < config.scene.dim; ++c) {
      target(c) = config.field_min +
                  (config.field_max - config.field_min) * rng.next_unit();
    }
    double min_dist = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < config.scene.anchors.rows(); ++i) {
      min_dist = std::min(
          min_dist,
          (target - config.scene.anchors.row(i).transpose()).norm());
    }
    if (min_dist > 1e-9 * scale) return target;
  }
  throw Error("draw_target: could not place target off the anchors");
}

bool needs_time(const std::vector<EstimatorTag>& tags) {
  for (EstimatorTag t : tags) {
    if (tag_model(t) != ModelLabel::SD_RSS) return true;
  }
  return false;
}

bool needs_rss(const std::vector<EstimatorTag>& tags) {
  for (EstimatorTag t : tags) {
    if (tag_model(t) == ModelLabel::SD_RSS) return true;
  }
  return false;
}

EstimateReport run_route(EstimatorTag tag, const BuiltLinearModel& built) {
  switch (tag) {
    case EstimatorTag::J_BLUE_TSE_TOA:
    case EstimatorTag::J_BLUE_SD_TOA:
    case EstimatorTag::J_BLUE_SD_TDOA:
    case EstimatorTag::J_BLUE_SD_RSS:
    case EstimatorTag::J_LS_SD_TOA:
    case EstimatorTag::J_LS_SD_TDOA:
    case EstimatorTag::J_LS_SD_RSS:
      return joint_ls(built.model);
    case EstimatorTag::OSP_BLUE_TSE_TOA:
    case EstimatorTag::OSP_BLUE_SD_TOA:
    case EstimatorTag::OSP_BLUE_SD_TDOA:
    case EstimatorTag::OSP_BLUE_SD_RSS:
      return osp_estimate_type1(built.model);
    case EstimatorTag::D_BLUE_TSE_TOA:
    case EstimatorTag::D_BLUE_SD_TOA:
    case EstimatorTag::D_BLUE_SD_TDOA:
    case EstimatorTag::D_BLUE_SD_RSS:
      return differential_estimate(built.model, build_plan(built.model));
    case EstimatorTag::D_LS_TSE_TOA:
    case EstimatorTag::D_LS_SD_RSS:
      return differential_estimate_unwhitened(built.model,
                                              build_plan(built.model));
  }
  throw Error("unknown estimator tag");
}

// Whether the tag runs on the raw (unwhitened) squared-difference model.
bool wants_raw_model(EstimatorTag tag) {
  return tag == EstimatorTag::J_LS_SD_TOA ||
         tag == EstimatorTag::J_LS_SD_TDOA ||
         tag == EstimatorTag::J_LS_SD_RSS;
}

struct TrialData {
  Vector d;       // biased ranges
  Vector p;       // received powers
  Vector r_true;  // anchor-to-target ranges
  std::optional<Vector> init;  // shared initial position estimate
};

double run_one(EstimatorTag tag, const CampaignConfig& config,
               const LocScene& scene, const TrialData& data, double sigma) {
  const Matrix& anchors = scene.anchors;
  Vector whiten_r = data.r_true;
  if (!config.true_whitening) {
    if (!data.init) throw EstimatorFailure("no whitening point");
    whiten_r = ranges_from(anchors, *data.init);
  }

  switch (tag_model(tag)) {
    case ModelLabel::TSE_TOA: {
      if (!data.init) throw EstimatorFailure("no initial estimate");
      Vector x = *data.init;
      for (int it = 0; it < config.tse_iterations; ++it) {
        const BuiltLinearModel built = build_tse(data.d, anchors, x, sigma);
        x = built.extract_position(run_route(tag, built).x_hat);
      }
      return (x - scene.target).squaredNorm();
    }
    case ModelLabel::SD_TOA: {
      const BuiltLinearModel built = build_sd_toa(
          data.d, anchors, whiten_r, sigma, !wants_raw_model(tag));
      const Vector x = built.extract_position(run_route(tag, built).x_hat);
      return (x - scene.target).squaredNorm();
    }
    case ModelLabel::SD_TDOA: {
      const BuiltLinearModel built =
          build_sd_tdoa(data.d, anchors, config.sd_tdoa_ref, whiten_r, sigma,
                        !wants_raw_model(tag));
      const Vector x = built.extract_position(run_route(tag, built).x_hat);
      return (x - scene.target).squaredNorm();
    }
    case ModelLabel::SD_RSS: {
      const BuiltLinearModel built = build_sd_rss(
          data.p, anchors, scene.gamma, sigma, !wants_raw_model(tag));
      const Vector x = built.extract_position(run_route(tag, built).x_hat);
      return (x - scene.target).squaredNorm();
    }
  }
  throw Error("unknown model label");
}

}  // namespace

std::string_view tag_name(EstimatorTag tag) { return entry_of(tag).name; }

ModelLabel tag_model(EstimatorTag tag) { return entry_of(tag).model; }

std::optional<EstimatorTag> tag_from_name(std::string_view name) {
  for (const TagEntry& e : kTagTable) {
    if (name == e.name) return e.tag;
  }
  return std::nullopt;
}

std::vector<EstimatorTag> all_tags() {
  std::vector<EstimatorTag> tags;
  tags.reserve(kEstimatorTagCount);
  for (const TagEntry& e : kTagTable) tags.push_back(e.tag);
  return tags;
}

TrialOutcome run_trial(const CampaignConfig& config, int trial_index) {
  validate_config(config);
  if (trial_index < 0 || trial_index >= config.trials) {
    throw IndexOutOfRange("run_trial: trial index outside campaign");
  }

  LocScene scene = config.scene;
  if (config.placement == CampaignConfig::Placement::UNIFORM) {
    scene.target = draw_target(config, trial_index);
  }
  const Vector r_true = ranges_from(scene.anchors, scene.target);
  const Index n = scene.anchors.rows();
  const bool want_time = needs_time(config.estimators);
  const bool want_rss = needs_rss(config.estimators);
  const bool want_init =
      !config.true_whitening ||
      std::any_of(config.estimators.begin(), config.estimators.end(),
                  [](EstimatorTag t) {
                    return tag_model(t) == ModelLabel::TSE_TOA;
                  });

  TrialOutcome outcome;
  outcome.sq_err.resize(config.sigma_grid.size());
  if (want_time) outcome.crlb_toa_trace.resize(config.sigma_grid.size());
  if (want_rss) outcome.crlb_rss_trace.resize(config.sigma_grid.size());

  for (std::size_t si = 0; si < config.sigma_grid.size(); ++si) {
    const double sigma = config.sigma_grid[si];
    scene.sigma = sigma;

    Rng noise = Rng::derive(config.seed, {kNoiseStream,
                                          static_cast<std::uint64_t>(trial_index),
                                          static_cast<std::uint64_t>(si)});
    Vector nstd(n);
    for (Index i = 0; i < n; ++i) nstd(i) = noise.next_gaussian();

    TrialData data;
    data.r_true = r_true;
    if (want_time) {
      data.d = (r_true.array() + scene.r0 + sigma * nstd.array()).matrix();
      outcome.crlb_toa_trace[si] = crlb_toa(scene);
    }
    if (want_rss) {
      data.p.resize(n);
      for (Index i = 0; i < n; ++i) {
        data.p(i) = scene.p0 - 10.0 * scene.gamma * std::log10(r_true(i)) +
                    sigma * nstd(i);
      }
      outcome.crlb_rss_trace[si] = crlb_rss(scene);
    }
    if (want_init && want_time) {
      try {
        const BuiltLinearModel bm = build_sd_tdoa(
            data.d, scene.anchors, config.sd_tdoa_ref, r_true, sigma, false);
        data.init = bm.extract_position(joint_ls(bm.model).x_hat);
      } catch (const Error&) {
        data.init = std::nullopt;
      }
    }

    auto& row = outcome.sq_err[si];
    row.resize(config.estimators.size());
    for (std::size_t ei = 0; ei < config.estimators.size(); ++ei) {
      try {
        row[ei] = run_one(config.estimators[ei], config, scene, data, sigma);
      } catch (const Error&) {
        row[ei] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return outcome;
}

CampaignResult run_campaign(const CampaignConfig& config) {
  validate_config(config);
  const std::size_t n_sigma = config.sigma_grid.size();
  const std::size_t n_est = config.estimators.size();

  std::vector<std::vector<Kahan>> err_acc(n_sigma,
                                          std::vector<Kahan>(n_est));
  std::vector<std::vector<int>> excluded(n_sigma,
                                         std::vector<int>(n_est, 0));
  std::vector<Kahan> crlb_toa_acc(n_sigma);
  std::vector<Kahan> crlb_rss_acc(n_sigma);

  for (int trial = 0; trial < config.trials; ++trial) {
    const TrialOutcome outcome = run_trial(config, trial);
    for (std::size_t si = 0; si < n_sigma; ++si) {
      for (std::size_t ei = 0; ei < n_est; ++ei) {
        const double v = outcome.sq_err[si][ei];
        if (std::isnan(v)) {
          ++excluded[si][ei];
        } else {
          err_acc[si][ei].add(v);
        }
      }
      if (!outcome.crlb_toa_trace.empty()) {
        crlb_toa_acc[si].add(outcome.crlb_toa_trace[si]);
      }
      if (!outcome.crlb_rss_trace.empty()) {
        crlb_rss_acc[si].add(outcome.crlb_rss_trace[si]);
      }
    }
  }

  CampaignResult result;
  for (std::size_t ei = 0; ei < n_est; ++ei) {
    const EstimatorTag tag = config.estimators[ei];
    const ModelLabel model = tag_model(tag);
    for (std::size_t si = 0; si < n_sigma; ++si) {
      CampaignRow row;
      row.model = model;
      row.estimator = tag;
      row.sigma = config.sigma_grid[si];
      row.rmse = std::sqrt(err_acc[si][ei].mean());
      row.crlb_rmse = model == ModelLabel::SD_RSS
                          ? std::sqrt(crlb_rss_acc[si].mean())
                          : std::sqrt(crlb_toa_acc[si].mean());
      row.trials = config.trials;
      row.excluded = excluded[si][ei];
      row.seed = config.seed;
      result.rows.push_back(row);
    }
  }
  return result;
}

double rmse_of(const std::vector<double>& squared_errors) {
  if (squared_errors.empty()) throw EmptyInput("rmse_of: no samples");
  Kahan acc;
  for (double v : squared_errors) {
    if (!std::isnan(v)) acc.add(v);
  }
  // Every trial excluded is a legitimate outcome for a degenerate
  // geometry; the row reports it as NaN rather than aborting the campaign.
  if (acc.n == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(acc.mean());
}

std::string campaign_csv(const CampaignResult& result) {
  std::ostringstream out;
  out << "model,estimator,sigma,rmse,crlb_rmse,trials,excluded,seed\n";
  for (const CampaignRow& row : result.rows) {
    out << model_name(row.model) << ',' << tag_name(row.estimator) << ','
        << textio::fmt_sig(row.sigma, 12) << ','
        << textio::fmt_sig(row.rmse, 12) << ','
        << textio::fmt_sig(row.crlb_rmse, 12) << ',' << row.trials << ','
        << row.excluded << ',' << row.seed << '\n';
  }
  return out.str();
}

}  // namespace nuisblue
