#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nuisblue/cli.hpp"
#include "nuisblue/differencing.hpp"
#include "nuisblue/estimators.hpp"
#include "nuisblue/harness.hpp"
#include "nuisblue/localization.hpp"
#include "nuisblue/svgplot.hpp"

namespace py = pybind11;
using namespace nuisblue;

PYBIND11_MODULE(_core, m) {
  m.doc() = "linear estimation with nuisance parameters";

  py::register_exception<Error>(m, "NuisblueError", PyExc_RuntimeError);

  // ---- matkernel
  py::class_<RankReport>(m, "RankReport")
      .def_readonly("rank", &RankReport::rank)
      .def_readonly("tolerance_used", &RankReport::tolerance_used);
  m.def("rank_of", &rank_of, py::arg("a"), py::arg("tol") = kRankTol);
  m.def("pinv", &pinv, py::arg("a"));
  m.def("null_space_basis", &null_space_basis, py::arg("g"));
  m.def("inv_sqrt_sym", &inv_sqrt_sym, py::arg("s"));

  // ---- linmodel
  py::class_<LinearNuisanceModel>(m, "LinearNuisanceModel")
      .def(py::init<>())
      .def(py::init([](Vector y, Matrix h, Matrix g, double sigma) {
             LinearNuisanceModel model;
             model.y = std::move(y);
             model.H = std::move(h);
             model.G = std::move(g);
             model.sigma = sigma;
             return model;
           }),
           py::arg("y"), py::arg("H"), py::arg("G"), py::arg("sigma") = 1.0)
      .def_readwrite("y", &LinearNuisanceModel::y)
      .def_readwrite("H", &LinearNuisanceModel::H)
      .def_readwrite("G", &LinearNuisanceModel::G)
      .def_readwrite("sigma", &LinearNuisanceModel::sigma)
      .def_property_readonly("n", &LinearNuisanceModel::n)
      .def_property_readonly("l", &LinearNuisanceModel::l)
      .def_property_readonly("m", &LinearNuisanceModel::m);
  m.def("validate",
        [](const LinearNuisanceModel& model) { return validate(model); },
        py::arg("model"));
  m.def("whiten", &whiten, py::arg("model"), py::arg("cov"));
  m.def("model_to_text", &model_to_text, py::arg("model"));
  m.def("model_from_text", &model_from_text, py::arg("text"));
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));

  py::enum_<Method>(m, "Method")
      .value("JLS", Method::JLS)
      .value("OSP1", Method::OSP1)
      .value("OSP2", Method::OSP2)
      .value("DIFF", Method::DIFF)
      .value("DIFF_UNWHITENED", Method::DIFF_UNWHITENED);

  py::class_<EstimateReport>(m, "EstimateReport")
      .def_readonly("x_hat", &EstimateReport::x_hat)
      .def_readonly("u_hat", &EstimateReport::u_hat)
      .def_readonly("method", &EstimateReport::method)
      .def_readonly("residual_norm", &EstimateReport::residual_norm);

  // ---- estimators
  py::class_<OspArtifacts>(m, "OspArtifacts")
      .def_readonly("projector", &OspArtifacts::projector)
      .def_readonly("basis", &OspArtifacts::basis);
  m.def("osp_artifacts", &osp_artifacts, py::arg("g"));
  m.def("joint_ls", &joint_ls, py::arg("model"));
  m.def("osp_estimate_type1", &osp_estimate_type1, py::arg("model"));
  m.def("osp_estimate_type2", &osp_estimate_type2, py::arg("model"));
  m.def("blue_covariance", &blue_covariance, py::arg("model"));

  // ---- differencing
  py::class_<ReferencePolicy> policy(m, "ReferencePolicy");
  policy
      .def_static("fixed_refs", &ReferencePolicy::fixed_refs,
                  py::arg("refs"))
      .def_static("first_nonzero", &ReferencePolicy::first_nonzero)
      .def_static("largest_magnitude", &ReferencePolicy::largest_magnitude);
  py::class_<StepRecord>(m, "StepRecord")
      .def_readonly("k", &StepRecord::k)
      .def_readonly("reference", &StepRecord::reference)
      .def_readonly("zero_rows", &StepRecord::zero_rows)
      .def_readonly("op", &StepRecord::op);
  py::class_<DifferencingPlan>(m, "DifferencingPlan")
      .def_readonly("steps", &DifferencingPlan::steps)
      .def_readonly("total", &DifferencingPlan::total)
      .def_readonly("whitener", &DifferencingPlan::whitener);
  m.def("single_ref_operator", &single_ref_operator, py::arg("n"),
        py::arg("j"));
  m.def("average_ref_operator", &average_ref_operator, py::arg("n"));
  m.def(
      "build_plan",
      [](const LinearNuisanceModel& model, const ReferencePolicy& policy,
         const std::vector<Index>& order) {
        return build_plan(model, policy, order);
      },
      py::arg("model"), py::arg("policy") = ReferencePolicy{},
      py::arg("order") = std::vector<Index>{});
  m.def("differential_estimate", &differential_estimate, py::arg("model"),
        py::arg("plan"));
  m.def("differential_estimate_unwhitened", &differential_estimate_unwhitened,
        py::arg("model"), py::arg("plan"));
  m.def("plan_dump", &plan_dump, py::arg("plan"));

  // ---- localization
  py::enum_<ModelLabel>(m, "ModelLabel")
      .value("TSE_TOA", ModelLabel::TSE_TOA)
      .value("SD_TOA", ModelLabel::SD_TOA)
      .value("SD_TDOA", ModelLabel::SD_TDOA)
      .value("SD_RSS", ModelLabel::SD_RSS);
  m.def("model_name",
        [](ModelLabel label) { return std::string(model_name(label)); },
        py::arg("label"));

  py::class_<LocScene>(m, "LocScene")
      .def(py::init<>())
      .def_readwrite("dim", &LocScene::dim)
      .def_readwrite("anchors", &LocScene::anchors)
      .def_readwrite("target", &LocScene::target)
      .def_readwrite("r0", &LocScene::r0)
      .def_readwrite("p0", &LocScene::p0)
      .def_readwrite("gamma", &LocScene::gamma)
      .def_readwrite("sigma", &LocScene::sigma);
  m.def("validate_scene",
        [](const LocScene& scene) { return validate_scene(scene); },
        py::arg("scene"));
  m.def("ranges", &ranges, py::arg("scene"));
  m.def("ranges_from", &ranges_from, py::arg("anchors"), py::arg("point"));
  m.def("simulate_toa", &simulate_toa, py::arg("scene"), py::arg("rng"));
  m.def("simulate_rss", &simulate_rss, py::arg("scene"), py::arg("rng"));

  py::class_<BuiltLinearModel>(m, "BuiltLinearModel")
      .def_readonly("model", &BuiltLinearModel::model)
      .def_readonly("label", &BuiltLinearModel::label)
      .def_readonly("position_dim", &BuiltLinearModel::position_dim)
      .def("extract_position", &BuiltLinearModel::extract_position,
           py::arg("x_hat"));
  m.def("build_tse", &build_tse, py::arg("d"), py::arg("anchors"),
        py::arg("x_prev"), py::arg("sigma"));
  m.def("build_sd_toa", &build_sd_toa, py::arg("d"), py::arg("anchors"),
        py::arg("whiten_ranges"), py::arg("sigma"),
        py::arg("whitened") = true);
  m.def("build_sd_tdoa", &build_sd_tdoa, py::arg("d"), py::arg("anchors"),
        py::arg("ref_j"), py::arg("whiten_ranges"), py::arg("sigma"),
        py::arg("whitened") = true);
  m.def("build_sd_rss", &build_sd_rss, py::arg("p"), py::arg("anchors"),
        py::arg("gamma"), py::arg("sigma"), py::arg("whitened") = true);
  m.def("crlb_toa", &crlb_toa, py::arg("scene"));
  m.def("crlb_rss", &crlb_rss, py::arg("scene"));
  m.def("scene_to_text", &scene_to_text, py::arg("scene"));
  m.def("scene_from_text", &scene_from_text, py::arg("text"));
  m.def("save_scene", &save_scene, py::arg("scene"), py::arg("path"));
  m.def("load_scene", &load_scene, py::arg("path"));

  // ---- rng
  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def_static(
          "derive",
          [](std::uint64_t seed, const std::vector<std::uint64_t>& path) {
            Rng rng(seed);
            // initializer_list cannot be built at runtime; fold pairwise.
            switch (path.size()) {
              case 0: return Rng::derive(seed, {});
              case 1: return Rng::derive(seed, {path[0]});
              case 2: return Rng::derive(seed, {path[0], path[1]});
              case 3: return Rng::derive(seed, {path[0], path[1], path[2]});
              default:
                throw Error("Rng.derive: path longer than 3 not supported");
            }
          },
          py::arg("seed"), py::arg("path"))
      .def("next_u64", &Rng::next_u64)
      .def("next_unit", &Rng::next_unit)
      .def("next_gaussian", &Rng::next_gaussian);

  // ---- harness
  py::enum_<EstimatorTag> tag(m, "EstimatorTag");
  for (EstimatorTag t : all_tags()) {
    std::string name(tag_name(t));
    for (char& c : name) {
      if (c == '-') c = '_';
    }
    tag.value(name.c_str(), t);
  }
  m.def("tag_name",
        [](EstimatorTag t) { return std::string(tag_name(t)); },
        py::arg("tag"));
  m.def("tag_from_name",
        [](const std::string& name) { return tag_from_name(name); },
        py::arg("name"));
  m.def("tag_model", &tag_model, py::arg("tag"));
  m.def("all_tags", &all_tags);

  py::class_<CampaignConfig> config(m, "CampaignConfig");
  py::enum_<CampaignConfig::Placement>(config, "Placement")
      .value("FIXED", CampaignConfig::Placement::FIXED)
      .value("UNIFORM", CampaignConfig::Placement::UNIFORM);
  config.def(py::init<>())
      .def_readwrite("scene", &CampaignConfig::scene)
      .def_readwrite("placement", &CampaignConfig::placement)
      .def_readwrite("field_min", &CampaignConfig::field_min)
      .def_readwrite("field_max", &CampaignConfig::field_max)
      .def_readwrite("redraw_per_trial", &CampaignConfig::redraw_per_trial)
      .def_readwrite("sigma_grid", &CampaignConfig::sigma_grid)
      .def_readwrite("trials", &CampaignConfig::trials)
      .def_readwrite("seed", &CampaignConfig::seed)
      .def_readwrite("estimators", &CampaignConfig::estimators)
      .def_readwrite("tse_iterations", &CampaignConfig::tse_iterations)
      .def_readwrite("sd_tdoa_ref", &CampaignConfig::sd_tdoa_ref)
      .def_readwrite("true_whitening", &CampaignConfig::true_whitening);

  py::class_<TrialOutcome>(m, "TrialOutcome")
      .def_readonly("sq_err", &TrialOutcome::sq_err)
      .def_readonly("crlb_toa_trace", &TrialOutcome::crlb_toa_trace)
      .def_readonly("crlb_rss_trace", &TrialOutcome::crlb_rss_trace);
  py::class_<CampaignRow>(m, "CampaignRow")
      .def_readonly("model", &CampaignRow::model)
      .def_readonly("estimator", &CampaignRow::estimator)
      .def_readonly("sigma", &CampaignRow::sigma)
      .def_readonly("rmse", &CampaignRow::rmse)
      .def_readonly("crlb_rmse", &CampaignRow::crlb_rmse)
      .def_readonly("trials", &CampaignRow::trials)
      .def_readonly("excluded", &CampaignRow::excluded)
      .def_readonly("seed", &CampaignRow::seed);
  py::class_<CampaignResult>(m, "CampaignResult")
      .def_readonly("rows", &CampaignResult::rows);
  m.def("run_trial", &run_trial, py::arg("config"), py::arg("trial_index"));
  m.def("run_campaign", &run_campaign, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("rmse_of", &rmse_of, py::arg("squared_errors"));
  m.def("campaign_csv", &campaign_csv, py::arg("result"));

  // ---- svg
  py::class_<PlotSeries>(m, "PlotSeries")
      .def(py::init<>())
      .def_readwrite("name", &PlotSeries::name)
      .def_readwrite("x", &PlotSeries::x)
      .def_readwrite("y", &PlotSeries::y)
      .def_readwrite("dashed", &PlotSeries::dashed);
  m.def("svg_loglog", &svg_loglog, py::arg("title"), py::arg("x_label"),
        py::arg("y_label"), py::arg("series"));
}
