#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "survkit/cox.hpp"
#include "survkit/error.hpp"
#include "survkit/km.hpp"
#include "survkit/metrics.hpp"
#include "survkit/pipeline.hpp"
#include "survkit/rsf.hpp"

namespace py = pybind11;
using namespace survkit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw DataError("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

std::vector<bool> to_events(const py::array_t<bool, py::array::forcecast>& a) {
  if (a.ndim() != 1) throw DataError("expected a one-dimensional event array");
  std::vector<bool> out(a.size());
  for (py::ssize_t i = 0; i < a.size(); ++i) out[i] = a.at(i);
  return out;
}

Array from_vector(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Dataset make_dataset(const Array& x, const Array& time, const py::array_t<bool, py::array::forcecast>& event,
                     std::vector<std::string> names) {
  if (x.ndim() != 2) throw DataError("covariates must be a two-dimensional array");
  const auto n = static_cast<std::size_t>(x.shape(0)), p = static_cast<std::size_t>(x.shape(1));
  const auto t = to_vector(time);
  const auto e = to_events(event);
  if (t.size() != n || e.size() != n) throw DataError("time and event must have one entry per row of X");
  if (names.empty()) {
    for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  }
  std::vector<SurvivalSample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    samples[i] = {t[i], e[i], std::vector<double>(x.data() + i * p, x.data() + (i + 1) * p)};
  }
  return Dataset(std::move(names), std::move(samples));
}

py::dict curve_dict(const SurvivalCurve& c) {
  py::dict out;
  out["times"] = from_vector(c.times);
  out["survival"] = from_vector(c.survival);
  out["ci_lower"] = from_vector(c.ci_lower);
  out["ci_upper"] = from_vector(c.ci_upper);
  out["at_risk"] = from_vector(c.at_risk);
  out["events"] = from_vector(c.events);
  return out;
}

TieMethod parse_ties(const std::string& s) {
  if (s == "efron") return TieMethod::kEfron;
  if (s == "breslow") return TieMethod::kBreslow;
  throw DataError("ties must be 'efron' or 'breslow', got '" + s + "'");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j, std::filesystem::path(path).parent_path());
}

}  // namespace

PYBIND11_MODULE(_survkit, m) {
  m.doc() = "Survival analysis: Kaplan-Meier, Cox regression, random survival forests and evaluation";

  auto base = py::register_exception<Error>(m, "SurvkitError", PyExc_RuntimeError);
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  auto numeric = py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", numeric.ptr());
  (void)data;

  m.def(
      "kaplan_meier",
      [](const Array& time, const py::array_t<bool, py::array::forcecast>& event, double confidence_level,
         const std::string& ci_method) {
        KmOptions o;
        o.confidence_level = confidence_level;
        if (ci_method == "log-log") o.ci_method = CiMethod::kLogLog;
        else if (ci_method == "linear") o.ci_method = CiMethod::kLinear;
        else throw DataError("ci_method must be 'log-log' or 'linear'");
        return curve_dict(km_fit(to_vector(time), to_events(event), o));
      },
      py::arg("time"), py::arg("event"), py::arg("confidence_level") = 0.95, py::arg("ci_method") = "log-log");

  m.def(
      "concordance_index",
      [](const Array& time, const py::array_t<bool, py::array::forcecast>& event, const Array& risk) {
        const auto r = concordance_index(to_vector(time), to_events(event), to_vector(risk));
        py::dict out;
        out["c_index"] = r.c_index;
        out["concordant"] = r.concordant;
        out["discordant"] = r.discordant;
        out["tied_risk"] = r.tied_risk;
        out["usable_pairs"] = r.usable_pairs;
        return out;
      },
      py::arg("time"), py::arg("event"), py::arg("risk"));

  m.def(
      "roc_at_horizon",
      [](const Array& time, const py::array_t<bool, py::array::forcecast>& event, const Array& risk, double horizon) {
        const auto r = roc_at_horizon(to_vector(time), to_events(event), to_vector(risk), horizon);
        std::vector<double> thr, fpr, tpr;
        for (const auto& p : r.points) {
          thr.push_back(p.threshold);
          fpr.push_back(p.fpr);
          tpr.push_back(p.tpr);
        }
        py::dict out;
        out["auc"] = r.auc;
        out["threshold"] = from_vector(thr);
        out["fpr"] = from_vector(fpr);
        out["tpr"] = from_vector(tpr);
        out["n_positive"] = r.n_positive;
        out["n_negative"] = r.n_negative;
        out["n_excluded"] = r.n_excluded;
        return out;
      },
      py::arg("time"), py::arg("event"), py::arg("risk"), py::arg("horizon"));

  py::class_<CoxSummaryRow>(m, "CoxSummaryRow")
      .def_readonly("feature", &CoxSummaryRow::feature)
      .def_readonly("coef", &CoxSummaryRow::coef)
      .def_readonly("hazard_ratio", &CoxSummaryRow::hazard_ratio)
      .def_readonly("se", &CoxSummaryRow::se)
      .def_readonly("ci_low_hr", &CoxSummaryRow::ci_low_hr)
      .def_readonly("ci_high_hr", &CoxSummaryRow::ci_high_hr)
      .def_readonly("z", &CoxSummaryRow::z)
      .def_readonly("p_value", &CoxSummaryRow::p_value);

  py::class_<CoxModel>(m, "CoxModel")
      .def_readonly("feature_names", &CoxModel::feature_names)
      .def_readonly("log_likelihood", &CoxModel::log_likelihood)
      .def_readonly("null_log_likelihood", &CoxModel::null_log_likelihood)
      .def_readonly("iterations", &CoxModel::iterations)
      .def_readonly("warnings", &CoxModel::warnings)
      .def_property_readonly("coef", [](const CoxModel& c) { return from_vector(c.beta); })
      .def("summary", &cox_summary, py::arg("confidence") = 0.95)
      .def("predict_risk", [](const CoxModel& c, const Array& x) { return cox_predict_risk(c, to_vector(x)); })
      .def("predict_survival",
           [](const CoxModel& c, const Array& x) { return curve_dict(cox_predict_survival(c, to_vector(x))); });

  m.def(
      "fit_cox",
      [](const Array& x, const Array& time, const py::array_t<bool, py::array::forcecast>& event,
         std::vector<std::string> names, const std::string& ties) {
        CoxFitOptions o;
        o.tie_method = parse_ties(ties);
        const Dataset d = make_dataset(x, time, event, std::move(names));
        py::gil_scoped_release release;
        return cox_fit(d, o);
      },
      py::arg("X"), py::arg("time"), py::arg("event"), py::arg("feature_names") = std::vector<std::string>{},
      py::arg("ties") = "efron");

  py::class_<SurvivalForest>(m, "SurvivalForest")
      .def_readonly("feature_names", &SurvivalForest::feature_names)
      .def_property_readonly("time_grid", [](const SurvivalForest& f) { return from_vector(f.time_grid); })
      .def_property_readonly("n_trees", [](const SurvivalForest& f) { return f.trees.size(); })
      .def("predict_chf",
           [](const SurvivalForest& f, const Array& x) { return from_vector(rsf_predict_chf(f, to_vector(x)).hazard); })
      .def("risk_score", [](const SurvivalForest& f, const Array& x) { return rsf_risk_score(f, to_vector(x)); })
      .def("oob_c_index",
           [](const SurvivalForest& f, const Array& x, const Array& time,
              const py::array_t<bool, py::array::forcecast>& event) {
             return rsf_oob_cindex(f, make_dataset(x, time, event, f.feature_names)).concordance.c_index;
           })
      .def("to_json", &rsf_to_json)
      .def_static("from_json", &rsf_from_json);

  m.def(
      "fit_rsf",
      [](const Array& x, const Array& time, const py::array_t<bool, py::array::forcecast>& event,
         std::vector<std::string> names, int n_trees, int mtry, int min_samples_split, int min_samples_leaf,
         std::optional<int> max_depth, std::uint64_t seed, int n_threads) {
        RsfOptions o;
        o.n_trees = n_trees;
        o.mtry = mtry;
        o.min_samples_split = min_samples_split;
        o.min_samples_leaf = min_samples_leaf;
        o.max_depth = max_depth;
        o.seed = seed;
        o.n_threads = n_threads;
        const Dataset d = make_dataset(x, time, event, std::move(names));
        py::gil_scoped_release release;
        return rsf_fit(d, o);
      },
      py::arg("X"), py::arg("time"), py::arg("event"), py::arg("feature_names") = std::vector<std::string>{},
      py::arg("n_trees") = 500, py::arg("mtry") = 0, py::arg("min_samples_split") = 10,
      py::arg("min_samples_leaf") = 5, py::arg("max_depth") = py::none(), py::arg("seed") = 42,
      py::arg("n_threads") = 0);

  m.def(
      "run_report",
      [](const std::string& config, const std::string& output_dir) {
        RunConfig c = config.empty() ? default_config() : load_config(config);
        if (!output_dir.empty()) c.output_dir = output_dir;
        return cmd_report(c);
      },
      py::arg("config"), py::arg("output_dir") = "",
      "Runs preprocessing, Kaplan-Meier, both models and evaluation; returns the printed summary.");
}
