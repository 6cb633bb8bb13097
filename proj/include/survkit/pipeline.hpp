#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "survkit/cox.hpp"
#include "survkit/ingest.hpp"
#include "survkit/km.hpp"
#include "survkit/rsf.hpp"

namespace survkit {

/// A KM stratification: either categorical on a column (values optionally
/// relabelled) or age bins when `age_edges` is non-empty.
struct Stratification {
  std::string name;
  std::string column;
  std::map<std::string, std::string> labels;
  std::vector<double> age_edges;
};

struct RunConfig {
  std::filesystem::path survival_path;
  std::filesystem::path clinical_path;
  std::string survival_key = "sample";
  std::string clinical_key = "sampleID";
  std::vector<std::string> missing_sentinels = kDefaultMissingSentinels;
  // Column renames applied to both inputs before merging (absent columns are skipped).
  std::vector<std::pair<std::string, std::string>> rename;

  PreprocessSpec preprocess;
  // Model features; empty means every feature of the canonical dataset.
  std::vector<std::string> features;
  std::vector<std::string> exclude;

  CoxFitOptions cox;
  RsfOptions rsf;
  KmOptions km;
  std::vector<Stratification> strata;
  bool svg = true;

  std::vector<std::string> models = {"cox", "rsf"};
  double horizon = 1000.0;
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "survkit_out";

  /// Copies `seed` into the split and forest settings.
  void propagate_seed();
};

/// Defaults reproducing the lung adenocarcinoma study setup.
RunConfig default_config();

/// Overlays a JSON config onto the defaults. Relative paths resolve against
/// `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::ordered_json config_to_json(const RunConfig& c);

/// Final model feature list after applying `features` and `exclude`.
std::vector<std::string> model_features(const RunConfig& c, const Dataset& d);

/// Each command writes its files under `output_dir` and returns a
/// human-readable summary.
std::string cmd_preprocess(const RunConfig& c);
std::string cmd_km(const RunConfig& c);
enum class ModelKind { kCox, kRsf };
std::string cmd_fit(const RunConfig& c, ModelKind model);
std::string cmd_evaluate(const RunConfig& c);
/// Runs every stage in order and writes a combined report.json.
std::string cmd_report(const RunConfig& c);

}  // namespace survkit
