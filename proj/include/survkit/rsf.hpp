#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survkit/metrics.hpp"
#include "survkit/types.hpp"

namespace survkit {

struct RsfOptions {
  int n_trees = 500;
  // Features tried per split; 0 selects ceil(sqrt(p)).
  int mtry = 0;
  int min_samples_split = 10;
  int min_samples_leaf = 5;
  int min_events_leaf = 1;
  std::optional<int> max_depth;
  std::uint64_t seed = 0;
  // Worker threads for tree construction; 0 uses the hardware concurrency.
  // Has no influence on the fitted forest.
  int n_threads = 0;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf = -1;  // index into SurvivalTree::leaves, -1 for internal nodes
};

/// Nelson-Aalen estimate of one leaf, stored sparsely on the forest time grid.
/// Tallies are weighted by in-bag multiplicity.
struct LeafEstimate {
  std::vector<std::uint32_t> grid_index;  // grid positions of the leaf's event times
  std::vector<double> at_risk;
  std::vector<double> events;
  std::vector<double> increments;  // events / at_risk

  /// Cumulative hazard evaluated on a grid of `grid_size` points.
  std::vector<double> chf(std::size_t grid_size) const;
};

struct SurvivalTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<LeafEstimate> leaves;
  std::vector<std::uint32_t> inbag;  // bootstrap multiplicity per training sample

  const LeafEstimate& route(std::span<const double> x) const;
};

struct SurvivalForest {
  RsfOptions options;  // mtry resolved to its effective value
  std::vector<std::string> feature_names;
  std::vector<double> time_grid;
  std::vector<SurvivalTree> trees;

  std::size_t p() const noexcept { return feature_names.size(); }
};

/// H(t) = sum over distinct event times t_i <= t of d_i / n_i.
CumulativeHazard nelson_aalen(std::span<const double> times, const std::vector<bool>& events);

/// Absolute standardized two-sample log-rank statistic. Returns 0 when the
/// variance vanishes (for instance when there are no events).
double logrank_split_statistic(std::span<const double> left_times, const std::vector<bool>& left_events,
                               std::span<const double> right_times,
                               const std::vector<bool>& right_events);

SurvivalForest rsf_fit(const Dataset& d, const RsfOptions& options = {});

/// Mean of the per-tree leaf cumulative hazards on the forest time grid.
CumulativeHazard rsf_predict_chf(const SurvivalForest& f, std::span<const double> x);

/// Mortality score: the ensemble cumulative hazard summed over the time grid.
double rsf_risk_score(const SurvivalForest& f, std::span<const double> x);

struct OobResult {
  ConcordanceResult concordance;
  std::size_t n_included = 0;
  std::size_t n_excluded = 0;  // samples that were in-bag for every tree
};

/// C-index of out-of-bag risk scores on the training data `d`.
OobResult rsf_oob_cindex(const SurvivalForest& f, const Dataset& d);

/// Versioned JSON model file. Loading reproduces identical predictions.
std::string rsf_to_json(const SurvivalForest& f);
SurvivalForest rsf_from_json(const std::string& text);

}  // namespace survkit
