#include "survkit/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "survkit/error.hpp"
#include "survkit/metrics.hpp"
#include "survkit/report.hpp"

namespace survkit {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kDatasetFile = "dataset.tsv";
constexpr const char* kAuditFile = "preprocess_audit.json";
constexpr const char* kCoxModelFile = "cox_model.json";
constexpr const char* kRsfModelFile = "rsf_model.json";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
  std::ostringstream buffer;
  writer(buffer);
  write_file(path, buffer.str());
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

const char* tie_name(TieMethod t) { return t == TieMethod::kEfron ? "efron" : "breslow"; }

ordered_json rsf_options_json(const RsfOptions& o) {
  return {{"n_trees", o.n_trees},
          {"mtry", o.mtry},
          {"min_samples_split", o.min_samples_split},
          {"min_samples_leaf", o.min_samples_leaf},
          {"min_events_leaf", o.min_events_leaf},
          {"max_depth", o.max_depth ? ordered_json(*o.max_depth) : ordered_json(nullptr)},
          {"seed", o.seed},
          {"n_threads", o.n_threads}};
}

ordered_json conventions_json() {
  return {{"c_index_pairs",
           "usable iff the shorter observed time is an event; tied times excluded; tied risks count 0.5"},
          {"roc_labels",
           "positive: event at or before horizon; negative: time after horizon; censored at or before horizon excluded"},
          {"cox_risk", "linear predictor beta'x"},
          {"rsf_risk", "ensemble cumulative hazard summed over the training event-time grid"}};
}

Dataset load_dataset(const RunConfig& c) { return read_dataset(c.output_dir / kDatasetFile); }

SplitIndices split_of(const RunConfig& c, const Dataset& d) {
  return stratified_split_indices(d.events(), c.preprocess.split_ratio, c.preprocess.seed);
}

std::string group_label(const Stratification& s, double value) {
  const std::string raw = format_number(value);
  auto it = s.labels.find(raw);
  return it == s.labels.end() ? raw : it->second;
}

template <typename T>
void read_if(const json& j, const char* key, T& target) {
  if (j.contains(key) && !j.at(key).is_null()) target = j.at(key).get<T>();
}

TieMethod parse_tie(const std::string& s) {
  if (s == "efron") return TieMethod::kEfron;
  if (s == "breslow") return TieMethod::kBreslow;
  throw DataError("unknown tie method '" + s + "'");
}

CiMethod parse_ci(const std::string& s) {
  if (s == "log-log") return CiMethod::kLogLog;
  if (s == "linear") return CiMethod::kLinear;
  throw DataError("unknown confidence interval method '" + s + "'");
}

}  // namespace

void RunConfig::propagate_seed() {
  preprocess.seed = seed;
  rsf.seed = seed;
}

RunConfig default_config() {
  RunConfig c;
  c.rename = {{"age_at_initial_pathologic_diagnosis", "age_at_diagnosis"},
              {"days_to_new_tumor_event_after_initial_treatment", "days_to_new_tumor_event"}};
  c.preprocess.numeric_features = {"PFI.time", "days_to_new_tumor_event", "age_at_diagnosis"};
  c.preprocess.label_encode = {{"gender", {{"FEMALE", 0}, {"MALE", 1}}, "gender_encoded"}};
  c.preprocess.one_hot = {{"residual_tumor", "R0", {"R0", "R1", "R2", "RX"}}};
  c.strata = {{"gender", "gender_encoded", {{"0", "FEMALE"}, {"1", "MALE"}}, {}},
              {"age", "age_at_diagnosis", {}, {0, 60, 100}},
              {"age_fine", "age_at_diagnosis", {}, {0, 20, 40, 60, 80, 100}}};
  c.propagate_seed();
  return c;
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig c = default_config();
  try {
    auto path = [&](const json& obj, const char* key, fs::path& target) {
      if (obj.contains(key)) {
        fs::path p = obj.at(key).get<std::string>();
        target = p.is_absolute() ? p : base_dir / p;
      }
    };
    if (j.contains("inputs")) {
      const auto& in = j.at("inputs");
      path(in, "survival", c.survival_path);
      path(in, "clinical", c.clinical_path);
      read_if(in, "survival_key", c.survival_key);
      read_if(in, "clinical_key", c.clinical_key);
      read_if(in, "missing_sentinels", c.missing_sentinels);
      if (in.contains("rename")) {
        c.rename.clear();
        for (const auto& [from, to] : in.at("rename").items()) c.rename.emplace_back(from, to.get<std::string>());
      }
    }
    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      auto& s = c.preprocess;
      read_if(p, "time_column", s.time_column);
      read_if(p, "event_column", s.event_column);
      read_if(p, "numeric_features", s.numeric_features);
      read_if(p, "outlier_column", s.outlier_column);
      read_if(p, "iqr_multiplier", s.iqr_multiplier);
      read_if(p, "split_ratio", s.split_ratio);
      read_if(p, "impute_on_full_table", s.impute_on_full_table);
      if (p.contains("label_encode")) {
        s.label_encode.clear();
        for (const auto& le : p.at("label_encode")) {
          LabelEncoding e;
          e.column = le.at("column").get<std::string>();
          e.mapping = le.at("mapping").get<std::map<std::string, int>>();
          read_if(le, "output_column", e.output_column);
          s.label_encode.push_back(std::move(e));
        }
      }
      if (p.contains("one_hot")) {
        s.one_hot.clear();
        for (const auto& oh : p.at("one_hot")) {
          OneHotEncoding e;
          e.column = oh.at("column").get<std::string>();
          e.reference = oh.at("reference").get<std::string>();
          read_if(oh, "categories", e.categories);
          s.one_hot.push_back(std::move(e));
        }
      }
    }
    read_if(j, "features", c.features);
    read_if(j, "exclude", c.exclude);
    read_if(j, "models", c.models);
    read_if(j, "horizon", c.horizon);
    read_if(j, "seed", c.seed);
    if (j.contains("output_dir")) path(j, "output_dir", c.output_dir);
    if (j.contains("cox")) {
      const auto& x = j.at("cox");
      if (x.contains("tie_method")) c.cox.tie_method = parse_tie(x.at("tie_method").get<std::string>());
      read_if(x, "tolerance", c.cox.tolerance);
      read_if(x, "max_iterations", c.cox.max_iterations);
      read_if(x, "step_halving_max", c.cox.step_halving_max);
    }
    if (j.contains("rsf")) {
      const auto& x = j.at("rsf");
      read_if(x, "n_trees", c.rsf.n_trees);
      read_if(x, "mtry", c.rsf.mtry);
      read_if(x, "min_samples_split", c.rsf.min_samples_split);
      read_if(x, "min_samples_leaf", c.rsf.min_samples_leaf);
      read_if(x, "min_events_leaf", c.rsf.min_events_leaf);
      read_if(x, "n_threads", c.rsf.n_threads);
      if (x.contains("max_depth") && !x.at("max_depth").is_null()) c.rsf.max_depth = x.at("max_depth").get<int>();
    }
    if (j.contains("km")) {
      const auto& x = j.at("km");
      read_if(x, "confidence_level", c.km.confidence_level);
      if (x.contains("ci_method")) c.km.ci_method = parse_ci(x.at("ci_method").get<std::string>());
      read_if(x, "svg", c.svg);
      if (x.contains("stratify")) {
        c.strata.clear();
        for (const auto& s : x.at("stratify")) {
          Stratification st;
          st.name = s.at("name").get<std::string>();
          st.column = s.at("column").get<std::string>();
          read_if(s, "labels", st.labels);
          read_if(s, "age_edges", st.age_edges);
          c.strata.push_back(std::move(st));
        }
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid config: ") + e.what());
  }
  c.propagate_seed();
  return c;
}

ordered_json config_to_json(const RunConfig& c) {
  ordered_json rename = ordered_json::object();
  for (const auto& [from, to] : c.rename) rename[from] = to;
  ordered_json label_encode = ordered_json::array();
  for (const auto& le : c.preprocess.label_encode) {
    ordered_json mapping = ordered_json::object();
    for (const auto& [k, v] : le.mapping) mapping[k] = v;
    label_encode.push_back({{"column", le.column}, {"mapping", mapping}, {"output_column", le.output_column}});
  }
  ordered_json one_hot = ordered_json::array();
  for (const auto& oh : c.preprocess.one_hot) {
    one_hot.push_back({{"column", oh.column}, {"reference", oh.reference}, {"categories", oh.categories}});
  }
  ordered_json strata = ordered_json::array();
  for (const auto& s : c.strata) {
    ordered_json labels = ordered_json::object();
    for (const auto& [k, v] : s.labels) labels[k] = v;
    strata.push_back({{"name", s.name}, {"column", s.column}, {"labels", labels}, {"age_edges", s.age_edges}});
  }
  const auto& p = c.preprocess;
  return {
      {"inputs",
       {{"survival", c.survival_path.filename().string()},
        {"clinical", c.clinical_path.filename().string()},
        {"survival_key", c.survival_key},
        {"clinical_key", c.clinical_key},
        {"missing_sentinels", c.missing_sentinels},
        {"rename", rename}}},
      {"preprocess",
       {{"time_column", p.time_column},
        {"event_column", p.event_column},
        {"numeric_features", p.numeric_features},
        {"label_encode", label_encode},
        {"one_hot", one_hot},
        {"outlier_column", p.outlier_column},
        {"iqr_multiplier", p.iqr_multiplier},
        {"split_ratio", p.split_ratio},
        {"impute_on_full_table", p.impute_on_full_table}}},
      {"features", c.features},
      {"exclude", c.exclude},
      {"models", c.models},
      {"cox",
       {{"tie_method", tie_name(c.cox.tie_method)},
        {"tolerance", c.cox.tolerance},
        {"max_iterations", c.cox.max_iterations},
        {"step_halving_max", c.cox.step_halving_max}}},
      {"rsf", rsf_options_json(c.rsf)},
      {"km",
       {{"confidence_level", c.km.confidence_level},
        {"ci_method", c.km.ci_method == CiMethod::kLogLog ? "log-log" : "linear"},
        {"svg", c.svg},
        {"stratify", strata}}},
      {"horizon", c.horizon},
      {"seed", c.seed}};
}

std::vector<std::string> model_features(const RunConfig& c, const Dataset& d) {
  std::vector<std::string> features = c.features.empty() ? d.feature_names() : c.features;
  for (const auto& f : features) d.feature_index(f);
  for (const auto& e : c.exclude) {
    auto it = std::find(features.begin(), features.end(), e);
    if (it == features.end()) throw DataError("excluded feature '" + e + "' is not in the feature list");
    features.erase(it);
  }
  if (features.empty()) throw DataError("no model features left after exclusions");
  return features;
}

std::string cmd_preprocess(const RunConfig& c) {
  LoadOptions surv_opts{TableFormat::kAuto, c.survival_key, c.missing_sentinels};
  LoadOptions clin_opts{TableFormat::kAuto, c.clinical_key, c.missing_sentinels};
  RawTable survival = load_table(c.survival_path, surv_opts);
  RawTable clinical = load_table(c.clinical_path, clin_opts);
  if (!survival.has_column(c.survival_key)) throw DataError("survival table lacks key column '" + c.survival_key + "'");
  if (!clinical.has_column(c.clinical_key)) throw DataError("clinical table lacks key column '" + c.clinical_key + "'");
  clinical.column_names[clinical.column_index(c.clinical_key)] = c.survival_key;
  clinical.key_column = c.survival_key;
  for (auto* t : {&survival, &clinical}) {
    for (const auto& [from, to] : c.rename) {
      if (t->has_column(from) && !t->has_column(to)) t->column_names[t->column_index(from)] = to;
    }
  }
  const RawTable merged = merge_on_key(survival, clinical);
  PreprocessResult result = preprocess(merged, c.preprocess);

  ordered_json audit;
  audit["inputs"] = {{"survival_rows", survival.n_rows()},
                     {"survival_columns", survival.n_cols()},
                     {"clinical_rows", clinical.n_rows()},
                     {"clinical_columns", clinical.n_cols()},
                     {"merged_rows", merged.n_rows()},
                     {"merged_columns", merged.n_cols()},
                     {"key", c.survival_key}};
  for (auto& [key, value] : result.audit.items()) audit[key] = value;
  audit["notes"] = {"missing days_to_new_tumor_event values are median-imputed, not zero-filled"};
  audit["config"] = config_to_json(c);

  write_with(c.output_dir / kDatasetFile, [&](std::ostream& out) { write_dataset(out, result.dataset); });
  write_file(c.output_dir / kAuditFile, dump(audit));

  std::ostringstream s;
  s << "preprocess: " << merged.n_rows() << " merged rows -> " << result.dataset.n() << " samples, "
    << result.dataset.p() << " features\n";
  for (const auto& st : audit["stages"]) {
    s << "  " << st["stage"].get<std::string>() << ": rows " << st["rows_in"] << " -> " << st["rows_out"]
      << ", columns " << st["columns_in"] << " -> " << st["columns_out"] << "\n";
  }
  s << "  split: train " << result.split.train.size() << ", test " << result.split.test.size() << "\n";
  s << "  IQR fences on " << c.preprocess.outlier_column << ": [" << audit["iqr"]["lower_fence"] << ", "
    << audit["iqr"]["upper_fence"] << "]\n";
  for (const auto& le : c.preprocess.label_encode) {
    s << "  " << le.column << " encoding:";
    for (const auto& [k, v] : le.mapping) s << ' ' << k << "->" << v;
    s << "\n";
  }
  s << "  wrote " << (c.output_dir / kDatasetFile).string() << ", " << (c.output_dir / kAuditFile).string() << "\n";
  return s.str();
}

std::string cmd_km(const RunConfig& c) {
  const Dataset d = load_dataset(c);
  const auto times = d.times();
  std::ostringstream s;
  ordered_json groups_json = ordered_json::object();

  auto export_set = [&](const std::string& name, const std::vector<std::string>& labels,
                        const std::vector<std::string>& required) {
    const StratifiedKm strat = km_stratified(d, labels, c.km, required);
    std::vector<double> grid = {c.horizon};
    for (const auto& [label, curve] : strat.curves) grid.insert(grid.end(), curve.times.begin(), curve.times.end());
    LabeledRows rows;
    ordered_json counts = ordered_json::object();
    for (const auto& [label, curve] : strat.curves) {
      std::vector<double> group_times;
      for (std::size_t i = 0; i < d.n(); ++i) {
        if (labels[i] == label) group_times.push_back(times[i]);
      }
      rows.emplace_back(label, curve_rows(curve, group_times, grid));
      counts[label] = {{"n", strat.group_sizes.at(label)},
                       {"events", strat.group_events.at(label)},
                       {"survival_at_horizon", curve_eval(curve, c.horizon)}};
    }
    write_with(c.output_dir / ("km_" + name + ".csv"), [&](std::ostream& out) { write_curve_csv(out, rows); });
    if (c.svg) write_file(c.output_dir / ("km_" + name + ".svg"), curve_svg(rows, "Kaplan-Meier: " + name));
    groups_json[name] = counts;
    s << "  " << name << ":";
    for (const auto& [label, n] : strat.group_sizes) s << ' ' << label << "=" << n;
    s << "\n";
  };

  export_set("overall", std::vector<std::string>(d.n(), "all"), {});
  for (const auto& st : c.strata) {
    if (std::find(d.feature_names().begin(), d.feature_names().end(), st.column) == d.feature_names().end()) {
      throw DataError("unknown stratification column '" + st.column + "'");
    }
    const auto values = d.column(d.feature_index(st.column));
    std::vector<std::string> labels;
    if (st.age_edges.empty()) {
      for (double v : values) labels.push_back(group_label(st, v));
    } else {
      labels = bin_age_groups(values, st.age_edges);
    }
    export_set(st.name, labels, {});
  }
  ordered_json summary = {{"horizon", c.horizon},
                          {"confidence_level", c.km.confidence_level},
                          {"ci_method", c.km.ci_method == CiMethod::kLogLog ? "log-log" : "linear"},
                          {"ties", "deaths precede censorings at equal times"},
                          {"groups", groups_json}};
  write_file(c.output_dir / "km_groups.json", dump(summary));
  return "km: group counts\n" + s.str();
}

std::string cmd_fit(const RunConfig& c, ModelKind model) {
  const Dataset full = load_dataset(c);
  const auto features = model_features(c, full);
  const Dataset d = full.select_features(features);
  const auto split = split_of(c, d);
  const Dataset train = d.subset(split.train);
  std::ostringstream s;

  if (model == ModelKind::kCox) {
    const CoxModel m = cox_fit(train, c.cox);
    const auto rows = cox_summary(m, 0.95);
    write_file(c.output_dir / kCoxModelFile, cox_to_json(m) + "\n");
    write_with(c.output_dir / "cox_summary.csv", [&](std::ostream& out) { write_cox_summary_csv(out, rows, 0.95); });
    std::vector<double> risks;
    for (const auto& smp : train.samples()) risks.push_back(cox_predict_risk(m, smp.covariates));
    const auto train_c = concordance_index(train.times(), train.events(), risks);
    ordered_json j = {{"model", "cox"},
                      {"n_train", train.n()},
                      {"events_train", train.event_count()},
                      {"tie_method", tie_name(m.tie_method)},
                      {"iterations", m.iterations},
                      {"log_likelihood", m.log_likelihood},
                      {"null_log_likelihood", m.null_log_likelihood},
                      {"train_c_index", train_c.c_index},
                      {"coefficients", cox_summary_json(rows, 0.95)},
                      {"warnings", m.warnings}};
    write_file(c.output_dir / "cox_summary.json", dump(j));
    s << "fit-cox: " << train.n() << " training samples, " << train.event_count() << " events, "
      << m.iterations << " iterations, log partial likelihood " << m.log_likelihood << "\n"
      << cox_summary_text(rows) << "train C-index " << train_c.c_index << "\n";
    for (const auto& w : m.warnings) s << "warning: " << w << "\n";
  } else {
    const SurvivalForest f = rsf_fit(train, c.rsf);
    write_file(c.output_dir / kRsfModelFile, rsf_to_json(f) + "\n");
    const OobResult oob = rsf_oob_cindex(f, train);
    ordered_json j = {{"model", "rsf"},
                      {"n_train", train.n()},
                      {"events_train", train.event_count()},
                      {"features", features},
                      {"options", rsf_options_json(f.options)},
                      {"time_grid_size", f.time_grid.size()},
                      {"oob_c_index", oob.concordance.c_index},
                      {"oob_usable_pairs", oob.concordance.usable_pairs},
                      {"oob_samples", oob.n_included},
                      {"oob_excluded_samples", oob.n_excluded}};
    write_file(c.output_dir / "rsf_summary.json", dump(j));
    s << "fit-rsf: " << f.trees.size() << " trees, mtry " << f.options.mtry << ", min_samples_split "
      << f.options.min_samples_split << ", min_samples_leaf " << f.options.min_samples_leaf << "\n"
      << "  OOB C-index " << oob.concordance.c_index << " over " << oob.n_included << " samples ("
      << oob.n_excluded << " never out-of-bag)\n";
  }
  return s.str();
}

std::string cmd_evaluate(const RunConfig& c) {
  const Dataset full = load_dataset(c);
  const auto split = split_of(c, full);
  const Dataset test = full.subset(split.test);
  const auto times = test.times();
  const auto events = test.events();

  ordered_json models = ordered_json::object();
  std::ostringstream table;
  table << "model,c_index,concordant,discordant,tied_risk,usable_pairs,auc,horizon,n_positive,n_negative,n_excluded\n";
  std::ostringstream s;
  s << "evaluate: " << test.n() << " test samples, horizon " << c.horizon << " days\n";

  for (const auto& name : c.models) {
    std::vector<double> risks;
    if (name == "cox") {
      const fs::path path = c.output_dir / kCoxModelFile;
      if (!fs::exists(path)) throw DataError("missing model artifact '" + path.string() + "'");
      const CoxModel m = cox_from_json(read_file(path));
      const Dataset sel = test.select_features(m.feature_names);
      for (const auto& smp : sel.samples()) risks.push_back(cox_predict_risk(m, smp.covariates));
    } else if (name == "rsf") {
      const fs::path path = c.output_dir / kRsfModelFile;
      if (!fs::exists(path)) throw DataError("missing model artifact '" + path.string() + "'");
      const SurvivalForest f = rsf_from_json(read_file(path));
      const Dataset sel = test.select_features(f.feature_names);
      for (const auto& smp : sel.samples()) risks.push_back(rsf_risk_score(f, smp.covariates));
    } else {
      throw DataError("unknown model '" + name + "'");
    }
    const ConcordanceResult ci = concordance_index(times, events, risks);
    const RocResult roc = roc_at_horizon(times, events, risks, c.horizon);
    write_with(c.output_dir / ("roc_" + name + ".csv"), [&](std::ostream& out) { write_roc_csv(out, roc); });
    models[name] = {{"c_index", ci.c_index},
                    {"concordant", ci.concordant},
                    {"discordant", ci.discordant},
                    {"tied_risk", ci.tied_risk},
                    {"usable_pairs", ci.usable_pairs},
                    {"auc", roc.auc},
                    {"horizon", roc.horizon},
                    {"n_positive", roc.n_positive},
                    {"n_negative", roc.n_negative},
                    {"n_excluded", roc.n_excluded}};
    table << name << ',' << format_number(ci.c_index) << ',' << ci.concordant << ',' << ci.discordant << ','
          << ci.tied_risk << ',' << ci.usable_pairs << ',' << format_number(roc.auc) << ','
          << format_number(roc.horizon) << ',' << roc.n_positive << ',' << roc.n_negative << ','
          << roc.n_excluded << '\n';
    s << "  " << name << ": C-index " << ci.c_index << " (" << ci.usable_pairs << " usable pairs), AUC@"
      << c.horizon << " " << roc.auc << " (" << roc.n_positive << " positive, " << roc.n_negative
      << " negative, " << roc.n_excluded << " excluded)\n";
  }
  ordered_json report = {{"horizon", c.horizon},
                         {"n_test", test.n()},
                         {"events_test", test.event_count()},
                         {"models", models},
                         {"conventions", conventions_json()}};
  write_file(c.output_dir / "evaluation.json", dump(report));
  write_file(c.output_dir / "comparison.csv", table.str());
  return s.str();
}

std::string cmd_report(const RunConfig& c) {
  std::string out = cmd_preprocess(c);
  out += cmd_km(c);
  out += cmd_fit(c, ModelKind::kCox);
  out += cmd_fit(c, ModelKind::kRsf);
  out += cmd_evaluate(c);

  auto load = [&](const char* file) { return ordered_json::parse(read_file(c.output_dir / file)); };
  ordered_json report = {{"config", config_to_json(c)},
                         {"preprocess", load(kAuditFile)},
                         {"km", load("km_groups.json")},
                         {"cox", load("cox_summary.json")},
                         {"rsf", load("rsf_summary.json")},
                         {"evaluation", load("evaluation.json")}};
  report["preprocess"].erase("config");
  write_file(c.output_dir / "report.json", dump(report));
  return out + "report: wrote " + (c.output_dir / "report.json").string() + "\n";
}

}  // namespace survkit
