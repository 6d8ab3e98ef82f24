#include "nuisblue/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nuisblue/differencing.hpp"
#include "nuisblue/estimators.hpp"
#include "nuisblue/svgplot.hpp"
#include "textio.hpp"

namespace nuisblue {

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

double cfg_double(const std::string& value, int line) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + value.size() || value.empty()) {
    throw ConfigError(line, "bad number '" + value + "'");
  }
  return v;
}

long cfg_long(const std::string& value, int line) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const long v = std::strtol(begin, &end, 10);
  if (end != begin + value.size() || value.empty()) {
    throw ConfigError(line, "bad integer '" + value + "'");
  }
  return v;
}

std::uint64_t cfg_u64(const std::string& value, int line) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end != begin + value.size() || value.empty() || value[0] == '-') {
    throw ConfigError(line, "bad seed '" + value + "'");
  }
  return v;
}

bool cfg_bool(const std::string& value, int line) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError(line, "expected true or false, got '" + value + "'");
}

std::string trim(std::string s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.erase(s.begin());
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  return s;
}

std::vector<std::string> cfg_list(const std::string& value) {
  std::string normalized = value;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  return textio::split_ws(normalized);
}

}  // namespace

LocalizeJob parse_campaign_config(const std::string& text) {
  LocalizeJob job;
  CampaignConfig& config = job.config;
  LocScene& scene = config.scene;
  scene.p0 = 10.0;

  std::vector<Vector> anchors;
  bool have_target = false;
  bool have_sigmas = false;
  bool have_sigma_range = false;
  std::vector<std::string> seen;
  int last_line = 1;

  const auto lines = textio::split_lines(text);
  std::string section;
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const int line_no = static_cast<int>(idx) + 1;
    last_line = line_no;
    std::string line = trim(lines[idx]);
    if (line.empty() || line[0] == '#') continue;

    if (line.front() == '[') {
      if (line == "[scene]" || line == "[campaign]") {
        section = line.substr(1, line.size() - 2);
        continue;
      }
      throw ConfigError(line_no, "unknown section " + line);
    }
    if (section.empty()) {
      throw ConfigError(line_no, "key before any [section]");
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line_no, "expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "empty key");
    if (value.empty()) throw ConfigError(line_no, "empty value for " + key);

    const std::string qualified = section + "." + key;
    if (key != "anchor") {
      if (std::find(seen.begin(), seen.end(), qualified) != seen.end()) {
        throw ConfigError(line_no, "duplicate key " + key);
      }
      seen.push_back(qualified);
    }

    if (section == "scene") {
      if (key == "dim") {
        const long dim = cfg_long(value, line_no);
        if (dim != 2 && dim != 3) {
          throw ConfigError(line_no, "dim must be 2 or 3");
        }
        scene.dim = static_cast<int>(dim);
      } else if (key == "anchor" || key == "target") {
        const auto parts = cfg_list(value);
        Vector point(static_cast<Index>(parts.size()));
        for (std::size_t j = 0; j < parts.size(); ++j) {
          point(static_cast<Index>(j)) = cfg_double(parts[j], line_no);
        }
        if (key == "anchor") {
          anchors.push_back(point);
        } else {
          scene.target = point;
          have_target = true;
        }
      } else if (key == "r0") {
        scene.r0 = cfg_double(value, line_no);
      } else if (key == "p0") {
        scene.p0 = cfg_double(value, line_no);
      } else if (key == "gamma") {
        scene.gamma = cfg_double(value, line_no);
      } else {
        throw ConfigError(line_no, "unknown scene key '" + key + "'");
      }
    } else {  // campaign
      if (key == "name") {
        job.name = value;
      } else if (key == "trials") {
        config.trials = static_cast<int>(cfg_long(value, line_no));
      } else if (key == "seed") {
        config.seed = cfg_u64(value, line_no);
        job.seed_was_set = true;
      } else if (key == "sigmas") {
        for (const std::string& tok : cfg_list(value)) {
          config.sigma_grid.push_back(cfg_double(tok, line_no));
        }
        have_sigmas = true;
      } else if (key == "sigma_range") {
        const auto parts = cfg_list(value);
        if (parts.size() != 3) {
          throw ConfigError(line_no, "sigma_range wants 'min max points'");
        }
        const double lo = cfg_double(parts[0], line_no);
        const double hi = cfg_double(parts[1], line_no);
        const long points = cfg_long(parts[2], line_no);
        if (!(lo > 0.0) || !(hi > lo) || points < 2) {
          throw ConfigError(line_no, "bad sigma_range");
        }
        for (long i = 0; i < points; ++i) {
          const double t = static_cast<double>(i) / (points - 1);
          config.sigma_grid.push_back(
              std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo))));
        }
        have_sigma_range = true;
      } else if (key == "estimators") {
        for (const std::string& tok : cfg_list(value)) {
          if (tok == "all") {
            const auto everything = all_tags();
            config.estimators.insert(config.estimators.end(),
                                     everything.begin(), everything.end());
            continue;
          }
          const auto tag = tag_from_name(tok);
          if (!tag) {
            throw ConfigError(line_no, "unknown estimator '" + tok + "'");
          }
          config.estimators.push_back(*tag);
        }
      } else if (key == "placement") {
        if (value == "fixed") {
          config.placement = CampaignConfig::Placement::FIXED;
        } else if (value == "uniform") {
          config.placement = CampaignConfig::Placement::UNIFORM;
        } else {
          throw ConfigError(line_no, "placement must be fixed or uniform");
        }
      } else if (key == "field") {
        const auto parts = cfg_list(value);
        if (parts.size() != 2) {
          throw ConfigError(line_no, "field wants 'min max'");
        }
        config.field_min = cfg_double(parts[0], line_no);
        config.field_max = cfg_double(parts[1], line_no);
      } else if (key == "redraw_per_trial") {
        config.redraw_per_trial = cfg_bool(value, line_no);
      } else if (key == "tse_iterations") {
        config.tse_iterations = static_cast<int>(cfg_long(value, line_no));
      } else if (key == "sd_tdoa_ref") {
        config.sd_tdoa_ref = cfg_long(value, line_no);
      } else if (key == "true_whitening") {
        config.true_whitening = cfg_bool(value, line_no);
      } else {
        throw ConfigError(line_no, "unknown campaign key '" + key + "'");
      }
    }
  }

  if (anchors.empty()) throw ConfigError(last_line, "no anchors given");
  for (const Vector& a : anchors) {
    if (a.size() != scene.dim) {
      throw ConfigError(last_line, "anchor width does not match dim");
    }
  }
  if (have_target && scene.target.size() != scene.dim) {
    throw ConfigError(last_line, "target width does not match dim");
  }
  scene.anchors.resize(static_cast<Index>(anchors.size()), scene.dim);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    scene.anchors.row(static_cast<Index>(i)) = anchors[i].transpose();
  }
  if (!have_target) {
    if (config.placement == CampaignConfig::Placement::FIXED) {
      throw ConfigError(last_line, "fixed placement needs a target");
    }
    scene.target = Vector::Constant(
        scene.dim, 0.5 * (config.field_min + config.field_max));
  }
  if (have_sigmas == have_sigma_range) {
    throw ConfigError(last_line, "give exactly one of sigmas or sigma_range");
  }
  if (config.estimators.empty()) {
    throw ConfigError(last_line, "no estimators selected");
  }
  return job;
}

LocalizeJob load_campaign_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_campaign_config(buf.str());
}

// ------------------------------------------------------- random instances

LinearNuisanceModel verify_random_model(Rng& rng) {
  for (;;) {
    const Index n = 4 + static_cast<Index>(rng.next_u64() % 9);   // 4..12
    const Index l = 1 + static_cast<Index>(rng.next_u64() % 4);   // 1..4
    const Index m = 1 + static_cast<Index>(rng.next_u64() % 4);   // 1..4
    if (n < l + m + 1) continue;
    LinearNuisanceModel model;
    model.y.resize(n);
    model.H.resize(n, l);
    model.G.resize(n, m);
    for (Index i = 0; i < n; ++i) model.y(i) = rng.next_gaussian();
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < l; ++j) model.H(i, j) = rng.next_gaussian();
    }
    // Nuisance entries are kept away from zero: the identities under test
    // hold for any full-rank G, but near-zero entries only stress floating
    // point, and the zero-row handling has its own directed tests.
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < m; ++j) {
        const double sign = (rng.next_u64() & 1u) ? 1.0 : -1.0;
        model.G(i, j) = sign * (0.1 + 2.9 * rng.next_unit());
      }
    }
    model.sigma = 0.5 + rng.next_unit();
    Matrix stacked(n, l + m);
    stacked << model.H, model.G;
    Eigen::BDCSVD<Matrix> svd(stacked);
    const Vector sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 1e4) {
      continue;
    }
    return model;
  }
}

LocScene verify_random_scene(Rng& rng) {
  LocScene scene;
  scene.dim = 2;
  const Index n = 6 + static_cast<Index>(rng.next_u64() % 5);  // 6..10
  scene.anchors.resize(n, 2);
  for (Index i = 0; i < n;) {
    Vector cand(2);
    cand << 50.0 * rng.next_unit(), 50.0 * rng.next_unit();
    bool ok = true;
    for (Index j = 0; j < i; ++j) {
      if ((cand - scene.anchors.row(j).transpose()).norm() < 2.0) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    scene.anchors.row(i) = cand.transpose();
    ++i;
  }
  scene.target.resize(2);
  for (;;) {
    scene.target << 5.0 + 40.0 * rng.next_unit(), 5.0 + 40.0 * rng.next_unit();
    double min_dist = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      min_dist = std::min(
          min_dist, (scene.target - scene.anchors.row(i).transpose()).norm());
    }
    if (min_dist > 1.0) break;
  }
  scene.r0 = -2.0 + 7.0 * rng.next_unit();
  scene.p0 = 10.0;
  scene.gamma = 1.5 + rng.next_unit();
  scene.sigma = 1.0;
  return scene;
}

// ------------------------------------------------------------ illustrate

namespace {

void print_matrix(std::ostream& out, const Matrix& a) {
  for (Index i = 0; i < a.rows(); ++i) {
    out << "  [";
    for (Index j = 0; j < a.cols(); ++j) {
      out << (j ? " " : "") << textio::fmt_sig(a(i, j), 10);
    }
    out << "]\n";
  }
}

double max_abs_dev(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

bool report_check(std::ostream& out, const char* what, double dev,
                  double tol) {
  const bool ok = dev <= tol;
  out << "  " << (ok ? "ok" : "MISMATCH") << ": " << what << " (max dev "
      << textio::fmt_sig(dev, 3) << ", tol " << textio::fmt_sig(tol, 3)
      << ")\n";
  return ok;
}

}  // namespace

int cmd_illustrate(std::ostream& out) {
  LinearNuisanceModel model;
  model.y.resize(3);
  model.y << 1.0, 2.0, 3.0;
  model.H.resize(3, 1);
  model.H << 3.0, 6.0, 7.0;
  model.G.resize(3, 2);
  model.G << 3.0, 2.0, 5.0, 4.0, 2.0, 8.0;
  model.sigma = 1.0;

  out << "worked example: N=3, L=1, M=2\n";
  out << "H^T = [3 6 7]; G columns [3 5 2] and [2 4 8]; y = [1 2 3]\n\n";
  bool all_ok = true;

  // Joint weights: [H G] is square and invertible, so the estimate is
  // exactly linear in y.
  Matrix stacked(3, 3);
  stacked << model.H, model.G;
  const Matrix weights = pinv(stacked);
  out << "joint least-squares weights (x row first, then the nuisances):\n";
  print_matrix(out, weights);
  Matrix weights_exact(3, 3);
  weights_exact << -16.0 / 5.0, 2.0, -1.0 / 5.0,
      2.0, -1.0, 0.0,
      23.0 / 10.0, -3.0 / 2.0, 3.0 / 10.0;
  all_ok &= report_check(out, "weights vs closed form",
                         max_abs_dev(weights, weights_exact), 1e-9);

  const OspArtifacts art = osp_artifacts(model.G);
  out << "\nprojector away from the nuisance subspace:\n";
  print_matrix(out, art.projector);
  Matrix projector_exact(3, 3);
  projector_exact << 1024.0, -640.0, 64.0,
      -640.0, 400.0, -40.0,
      64.0, -40.0, 4.0;
  projector_exact /= 1428.0;
  all_ok &= report_check(out, "projector vs closed form",
                         max_abs_dev(art.projector, projector_exact), 1e-12);
  Matrix projector_printed(3, 3);
  projector_printed << 0.7171, -0.4482, 0.0448,
      -0.4482, 0.2801, -0.0280,
      0.0448, -0.0280, 0.0028;
  all_ok &= report_check(out, "projector vs 4-digit reference",
                         max_abs_dev(art.projector, projector_printed), 5e-5);
  all_ok &= report_check(
      out, "basis outer product vs projector",
      max_abs_dev(art.basis * art.basis.transpose(), art.projector), 1e-12);

  // Differencing with the references pinned to rows 3 then 1 (1-based).
  const auto policy = ReferencePolicy::fixed_refs({2, 0});
  const DifferencingPlan plan = build_plan(model, policy);
  out << "\nstep 1 operator (reference row 3):\n";
  print_matrix(out, plan.steps[0].op);
  Matrix step1_exact(2, 3);
  step1_exact << 1.0 / 3.0, 0.0, -1.0 / 2.0,
      0.0, 1.0 / 5.0, -1.0 / 2.0;
  all_ok &= report_check(out, "step 1 vs closed form",
                         max_abs_dev(plan.steps[0].op, step1_exact), 1e-12);

  out << "step 2 operator (reference row 1):\n";
  print_matrix(out, plan.steps[1].op);
  Matrix step2_exact(1, 2);
  step2_exact << 3.0 / 10.0, -5.0 / 16.0;
  all_ok &= report_check(out, "step 2 vs closed form",
                         max_abs_dev(plan.steps[1].op, step2_exact), 1e-12);

  out << "total differencing operator:\n";
  print_matrix(out, plan.total);
  Matrix total_exact(1, 3);
  total_exact << 1.0 / 10.0, -1.0 / 16.0, 1.0 / 160.0;
  all_ok &= report_check(out, "total vs closed form",
                         max_abs_dev(plan.total, total_exact), 1e-12);
  all_ok &= report_check(out, "total annihilates G",
                         (plan.total * model.G).cwiseAbs().maxCoeff(), 1e-12);

  out << "whitened operator:\n";
  print_matrix(out, plan.whitener);
  all_ok &= report_check(
      out, "whitener gram matrix vs projector",
      max_abs_dev(plan.whitener.transpose() * plan.whitener, art.projector),
      1e-10);

  const EstimateReport jls = joint_ls(model);
  const EstimateReport osp1 = osp_estimate_type1(model);
  const EstimateReport osp2 = osp_estimate_type2(model);
  const EstimateReport diff = differential_estimate(model, plan);
  out << "\nestimates of x from y = [1 2 3]:\n";
  out << "  joint " << textio::fmt_sig(jls.x_hat(0), 10) << ", projection "
      << textio::fmt_sig(osp1.x_hat(0), 10) << ", reduced "
      << textio::fmt_sig(osp2.x_hat(0), 10) << ", differenced "
      << textio::fmt_sig(diff.x_hat(0), 10) << '\n';
  const double spread =
      std::max({std::abs(jls.x_hat(0) - osp1.x_hat(0)),
                std::abs(jls.x_hat(0) - osp2.x_hat(0)),
                std::abs(jls.x_hat(0) - diff.x_hat(0))});
  all_ok &= report_check(out, "estimates agree", spread, 1e-12);
  out << "  nuisance estimate [" << textio::fmt_sig((*jls.u_hat)(0), 10)
      << " " << textio::fmt_sig((*jls.u_hat)(1), 10) << "]\n";

  out << (all_ok ? "\nall checks passed\n" : "\nCHECKS FAILED\n");
  return all_ok ? 0 : 1;
}

// ----------------------------------------------------------------- verify

namespace {

struct SuiteOutcome {
  bool pass = true;
  double worst = 0.0;
  std::string detail;  // first failing instance, as model text

  void consider(double dev, double tol, const LinearNuisanceModel& model) {
    if (dev > worst) worst = dev;
    if (dev > tol && pass) {
      pass = false;
      detail = model_to_text(model);
    }
  }
};

void print_suite(std::ostream& out, const char* name, int count,
                 const SuiteOutcome& suite, double tol) {
  out << (suite.pass ? "[PASS] " : "[FAIL] ") << name << ": " << count
      << " instances, max dev " << textio::fmt_sig(suite.worst, 3) << ", tol "
      << textio::fmt_sig(tol, 3) << '\n';
  if (!suite.pass) {
    out << "first failing instance:\n" << suite.detail;
  }
}

double rel_dev(const Vector& a, const Vector& b, const Vector& reference) {
  const double scale = std::max(1.0, reference.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

int cmd_verify(const VerifyOptions& options, std::ostream& out) {
  if (options.trials < 1) {
    out << "error: trials must be >= 1\n";
    return 2;
  }
  const bool skip_whitening = options.inject_fault == "skip-whitening";
  if (!options.inject_fault.empty() && !skip_whitening) {
    out << "error: unknown fault '" << options.inject_fault << "'\n";
    return 2;
  }
  const int trials = options.trials;
  int failures = 0;
  out << "verification: " << trials << " random instances, seed "
      << options.seed << '\n';

  // Suite 1: the four estimation routes agree.
  {
    Rng rng = Rng::derive(options.seed, {11});
    SuiteOutcome suite;
    for (int t = 0; t < trials; ++t) {
      const LinearNuisanceModel model = verify_random_model(rng);
      double dev = std::numeric_limits<double>::infinity();
      try {
        const Vector x0 = joint_ls(model).x_hat;
        const Vector x1 = osp_estimate_type1(model).x_hat;
        const Vector x2 = osp_estimate_type2(model).x_hat;
        const Vector x3 =
            differential_estimate(model, build_plan(model)).x_hat;
        dev = std::max({rel_dev(x1, x0, x0), rel_dev(x2, x0, x0),
                        rel_dev(x3, x0, x0)});
      } catch (const Error&) {
      }
      suite.consider(dev, 1e-8, model);
    }
    print_suite(out, "estimate equivalence", trials, suite, 1e-8);
    failures += suite.pass ? 0 : 1;
  }

  // Suite 2: whitened gram matrix equals both projector forms.
  {
    Rng rng = Rng::derive(options.seed, {12});
    SuiteOutcome suite;
    for (int t = 0; t < trials; ++t) {
      const LinearNuisanceModel model = verify_random_model(rng);
      double dev = std::numeric_limits<double>::infinity();
      try {
        const OspArtifacts art = osp_artifacts(model.G);
        const DifferencingPlan plan = build_plan(model);
        const Matrix gram = plan.whitener.transpose() * plan.whitener;
        dev = std::max(max_abs_dev(gram, art.projector),
                       max_abs_dev(gram, art.basis * art.basis.transpose()));
      } catch (const Error&) {
      }
      suite.consider(dev, 1e-9, model);
    }
    print_suite(out, "gram identity", trials, suite, 1e-9);
    failures += suite.pass ? 0 : 1;
  }

  // Suite 3: projector properties.
  {
    Rng rng = Rng::derive(options.seed, {13});
    SuiteOutcome suite;
    for (int t = 0; t < trials; ++t) {
      const LinearNuisanceModel model = verify_random_model(rng);
      double dev = std::numeric_limits<double>::infinity();
      try {
        const OspArtifacts art = osp_artifacts(model.G);
        const Matrix& p = art.projector;
        dev = std::max({max_abs_dev(p, p.transpose()), max_abs_dev(p * p, p),
                        (p * model.G).cwiseAbs().maxCoeff()});
      } catch (const Error&) {
      }
      suite.consider(dev, 1e-10, model);
    }
    print_suite(out, "projector properties", trials, suite, 1e-10);
    failures += suite.pass ? 0 : 1;
  }

  // Suite 4: the whitened estimate ignores the reference choice.
  {
    Rng rng = Rng::derive(options.seed, {14});
    SuiteOutcome suite;
    for (int t = 0; t < trials; ++t) {
      LinearNuisanceModel model = verify_random_model(rng);
      // Single nuisance, at least five rows, so five references exist.
      while (model.m() != 1 || model.n() < 5) {
        model = verify_random_model(rng);
      }
      const auto estimate = [&](const ReferencePolicy& policy) {
        const DifferencingPlan plan = build_plan(model, policy);
        return skip_whitening
                   ? differential_estimate_unwhitened(model, plan).x_hat
                   : differential_estimate(model, plan).x_hat;
      };
      double dev = std::numeric_limits<double>::infinity();
      try {
        const Vector base = estimate(ReferencePolicy::fixed_refs({0}));
        dev = 0.0;
        for (Index j = 1; j < 5; ++j) {
          dev = std::max(dev,
                         rel_dev(estimate(ReferencePolicy::fixed_refs({j})),
                                 base, base));
        }
        dev = std::max(
            dev,
            rel_dev(estimate(ReferencePolicy::largest_magnitude()), base,
                    base));
        dev = std::max(dev, rel_dev(estimate(ReferencePolicy::first_nonzero()),
                                    base, base));
      } catch (const Error&) {
      }
      suite.consider(dev, 1e-8, model);
    }
    print_suite(out, "reference invariance", trials, suite, 1e-8);
    failures += suite.pass ? 0 : 1;
  }

  // Suite 5: the whitened estimate ignores the elimination order.
  {
    Rng rng = Rng::derive(options.seed, {15});
    SuiteOutcome suite;
    for (int t = 0; t < trials; ++t) {
      LinearNuisanceModel model = verify_random_model(rng);
      while (model.m() < 2) model = verify_random_model(rng);
      std::vector<Index> forward(model.m());
      std::iota(forward.begin(), forward.end(), Index{0});
      std::vector<Index> backward(forward.rbegin(), forward.rend());
      std::vector<Index> rotated(forward.begin() + 1, forward.end());
      rotated.push_back(0);
      const ReferencePolicy policy;
      double dev = std::numeric_limits<double>::infinity();
      try {
        const Vector base =
            differential_estimate(model, build_plan(model, policy, forward))
                .x_hat;
        const Vector rev =
            differential_estimate(model, build_plan(model, policy, backward))
                .x_hat;
        const Vector rot =
            differential_estimate(model, build_plan(model, policy, rotated))
                .x_hat;
        dev = std::max(rel_dev(rev, base, base), rel_dev(rot, base, base));
      } catch (const Error&) {
      }
      suite.consider(dev, 1e-8, model);
    }
    print_suite(out, "elimination order invariance", trials, suite, 1e-8);
    failures += suite.pass ? 0 : 1;
  }

  // Suite 6: noise-free localization models are solved exactly.
  {
    Rng rng = Rng::derive(options.seed, {16});
    const int scenes = std::max(20, trials / 10);
    SuiteOutcome suite;
    for (int t = 0; t < scenes; ++t) {
      const LocScene scene = verify_random_scene(rng);
      LinearNuisanceModel shown;
      double dev = std::numeric_limits<double>::infinity();
      try {
      const Vector r = ranges(scene);
      const Vector d = (r.array() + scene.r0).matrix();
      Vector p(r.size());
      for (Index i = 0; i < r.size(); ++i) {
        p(i) = scene.p0 - 10.0 * scene.gamma * std::log10(r(i));
      }
      const BuiltLinearModel models[] = {
          build_tse(d, scene.anchors, scene.target, 1.0),
          build_sd_toa(d, scene.anchors, r, 1.0),
          build_sd_tdoa(d, scene.anchors, 0, r, 1.0),
          build_sd_rss(p, scene.anchors, scene.gamma, 1.0),
      };
      shown = models[1].model;
      const double scale = std::max(1.0, scene.target.cwiseAbs().maxCoeff());
      dev = 0.0;
      for (const BuiltLinearModel& built : models) {
        const Vector routes[] = {
            built.extract_position(joint_ls(built.model).x_hat),
            built.extract_position(osp_estimate_type1(built.model).x_hat),
            built.extract_position(osp_estimate_type2(built.model).x_hat),
            built.extract_position(
                differential_estimate(built.model, build_plan(built.model))
                    .x_hat),
        };
        for (const Vector& x : routes) {
          dev = std::max(dev,
                         (x - scene.target).cwiseAbs().maxCoeff() / scale);
        }
        const Vector u = *joint_ls(built.model).u_hat;
        switch (built.label) {
          case ModelLabel::TSE_TOA:
            dev = std::max(dev, std::abs(u(0) - scene.r0) / scale);
            break;
          case ModelLabel::SD_TOA: {
            const double u0 =
                scene.target.squaredNorm() - scene.r0 * scene.r0;
            dev = std::max(dev, std::abs(u(0) - u0) /
                                    std::max(1.0, std::abs(u0)));
            dev = std::max(dev, std::abs(u(1) - scene.r0) / scale);
            break;
          }
          case ModelLabel::SD_TDOA:
            dev = std::max(dev, std::abs(u(0) - r(0)) / scale);
            break;
          case ModelLabel::SD_RSS: {
            const double p0t =
                std::pow(10.0, scene.p0 / (5.0 * scene.gamma));
            dev = std::max(dev,
                           std::abs(u(0) - p0t) / std::max(1.0, p0t));
            break;
          }
        }
      }
      } catch (const Error&) {
      }
      suite.consider(dev, 1e-8, shown);
    }
    print_suite(out, "noise-free recovery", scenes, suite, 1e-8);
    failures += suite.pass ? 0 : 1;
  }

  out << (failures == 0 ? "verification passed\n" : "verification FAILED\n");
  return failures;
}

// --------------------------------------------------------------- localize

int cmd_localize(const LocalizeOptions& options, std::ostream& out,
                 std::ostream& err) {
  LocalizeJob job;
  try {
    job = load_campaign_config(options.config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << " (line " << e.line << ")\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  if (!job.seed_was_set && options.seed_override) {
    job.config.seed = *options.seed_override;
  }

  try {
    const CampaignResult result = run_campaign(job.config);
    fs::create_directories(options.out_dir);

    const fs::path csv_path =
        fs::path(options.out_dir) / (job.name + ".csv");
    {
      std::ofstream csv(csv_path, std::ios::binary);
      if (!csv) throw Error("cannot open " + csv_path.string());
      csv << campaign_csv(result);
    }
    out << "wrote " << csv_path.generic_string() << '\n';

    const ModelLabel labels[] = {ModelLabel::TSE_TOA, ModelLabel::SD_TOA,
                                 ModelLabel::SD_TDOA, ModelLabel::SD_RSS};
    for (ModelLabel label : labels) {
      std::vector<PlotSeries> series;
      PlotSeries bound;
      for (const CampaignRow& row : result.rows) {
        if (row.model != label) continue;
        if (series.empty() ||
            series.back().name != tag_name(row.estimator)) {
          PlotSeries s;
          s.name = std::string(tag_name(row.estimator));
          series.push_back(std::move(s));
        }
        series.back().x.push_back(row.sigma);
        series.back().y.push_back(row.rmse);
        if (series.size() == 1) {
          bound.x.push_back(row.sigma);
          bound.y.push_back(row.crlb_rmse);
        }
      }
      if (series.empty()) continue;
      bound.name = "CRLB";
      bound.dashed = true;
      series.push_back(std::move(bound));

      const bool rss = label == ModelLabel::SD_RSS;
      const std::string svg = svg_loglog(
          job.name + " " + std::string(model_name(label)),
          rss ? "noise std [dB]" : "noise std [m]", "position RMSE [m]",
          series);
      const fs::path svg_path =
          fs::path(options.out_dir) /
          (job.name + "-" + std::string(model_name(label)) + ".svg");
      std::ofstream file(svg_path, std::ios::binary);
      if (!file) throw Error("cannot open " + svg_path.string());
      file << svg;
      out << "wrote " << svg_path.generic_string() << '\n';
    }

    out << "rows " << result.rows.size() << ", trials " << job.config.trials
        << ", seed " << job.config.seed << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace nuisblue
