// survkit command-line driver.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "survkit/error.hpp"
#include "survkit/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
  std::vector<std::string> features;
  std::vector<std::string> exclude;
  std::string out;
  bool compat_impute_full = false;
};

survkit::RunConfig resolve(const Overrides& o) {
  survkit::RunConfig c = survkit::default_config();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw survkit::DataError("cannot open config '" + o.config + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw survkit::DataError("config is not valid JSON: " + std::string(e.what()));
    }
    c = survkit::config_from_json(j, std::filesystem::path(o.config).parent_path());
  }
  if (o.seed) c.seed = *o.seed;
  if (o.horizon) c.horizon = *o.horizon;
  if (!o.features.empty()) c.features = o.features;
  if (!o.exclude.empty()) c.exclude = o.exclude;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.compat_impute_full) c.preprocess.impute_on_full_table = true;
  c.propagate_seed();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survkit: survival analysis pipeline (Kaplan-Meier, Cox, random survival forest)"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Seed for the split and the forest");
    cmd->add_option("--horizon", o.horizon, "ROC horizon in days");
    cmd->add_option("--features", o.features, "Model features (comma separated)")->delimiter(',');
    cmd->add_option("--exclude", o.exclude, "Features to drop (comma separated)")->delimiter(',');
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_flag("--compat-impute-full", o.compat_impute_full,
                  "Fit imputation medians on the full table before splitting");
  };

  std::string verb;
  for (const char* name : {"preprocess", "km", "fit-cox", "fit-rsf", "evaluate", "report"}) {
    auto* cmd = app.add_subcommand(name);
    add_common(cmd);
    cmd->callback([&verb, name] { verb = name; });
  }
  app.get_subcommand("preprocess")->description("Merge, clean, encode and split the input tables");
  app.get_subcommand("km")->description("Kaplan-Meier curves, overall and stratified");
  app.get_subcommand("fit-cox")->description("Fit a Cox proportional hazards model on the training split");
  app.get_subcommand("fit-rsf")->description("Fit a random survival forest on the training split");
  app.get_subcommand("evaluate")->description("Test-set C-index and horizon ROC for fitted models");
  app.get_subcommand("report")->description("Run every stage and write a combined report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const survkit::RunConfig c = resolve(o);
    std::string summary;
    if (verb == "preprocess") summary = survkit::cmd_preprocess(c);
    else if (verb == "km") summary = survkit::cmd_km(c);
    else if (verb == "fit-cox") summary = survkit::cmd_fit(c, survkit::ModelKind::kCox);
    else if (verb == "fit-rsf") summary = survkit::cmd_fit(c, survkit::ModelKind::kRsf);
    else if (verb == "evaluate") summary = survkit::cmd_evaluate(c);
    else summary = survkit::cmd_report(c);
    std::cout << summary;
    return kOk;
  } catch (const survkit::NumericError& e) {
    std::cerr << "survkit: numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const survkit::DataError& e) {
    std::cerr << "survkit: data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "survkit: " << e.what() << "\n";
    return kData;
  }
}
