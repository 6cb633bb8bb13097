#include "survkit/rsf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "json.hpp"
#include "survkit/error.hpp"

namespace survkit {

namespace {

constexpr int kModelVersion = 1;

// Weighted risk-set tallies of one node over its own distinct event times.
struct NodeTallies {
  std::vector<double> event_times;  // tau_k, ascending
  std::vector<double> at_risk;      // n_k
  std::vector<double> deaths;       // d_k
  std::vector<std::uint32_t> slot;  // per member: number of tau_k <= its time
};

// Training data in canonical sample order, shared by all trees.
struct TrainingView {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> x;  // row-major n x p
  std::vector<double> time;
  std::vector<bool> event;

  double value(std::size_t i, std::size_t j) const { return x[i * p + j]; }
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double statistic = 0.0;
};

NodeTallies tally(const TrainingView& data, const std::vector<std::uint32_t>& members,
                  const std::vector<std::uint32_t>& weight) {
  NodeTallies t;
  for (auto m : members) {
    if (data.event[m]) t.event_times.push_back(data.time[m]);
  }
  std::sort(t.event_times.begin(), t.event_times.end());
  t.event_times.erase(std::unique(t.event_times.begin(), t.event_times.end()), t.event_times.end());
  const std::size_t k = t.event_times.size();
  t.deaths.assign(k, 0.0);
  std::vector<double> leaving(k + 1, 0.0);
  t.slot.reserve(members.size());
  for (auto m : members) {
    const auto s = static_cast<std::uint32_t>(
        std::upper_bound(t.event_times.begin(), t.event_times.end(), data.time[m]) -
        t.event_times.begin());
    t.slot.push_back(s);
    leaving[s] += weight[m];
    if (data.event[m]) t.deaths[s - 1] += weight[m];
  }
  // A member with slot s is at risk at tau_0 .. tau_{s-1}.
  t.at_risk.assign(k, 0.0);
  double running = 0.0;
  for (std::size_t s = k + 1; s-- > 1;) {
    running += leaving[s];
    t.at_risk[s - 1] = running;
  }
  return t;
}

LeafEstimate make_leaf(const NodeTallies& t, const std::vector<double>& grid) {
  LeafEstimate leaf;
  for (std::size_t k = 0; k < t.event_times.size(); ++k) {
    if (t.deaths[k] <= 0.0) continue;
    auto g = std::lower_bound(grid.begin(), grid.end(), t.event_times[k]) - grid.begin();
    leaf.grid_index.push_back(static_cast<std::uint32_t>(g));
    leaf.at_risk.push_back(t.at_risk[k]);
    leaf.events.push_back(t.deaths[k]);
    leaf.increments.push_back(t.deaths[k] / t.at_risk[k]);
  }
  return leaf;
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingView& data, const std::vector<double>& grid, const RsfOptions& options,
              std::mt19937_64& rng)
      : data_(data), grid_(grid), options_(options), rng_(rng) {}

  SurvivalTree build(const std::vector<std::uint32_t>& weight) {
    weight_ = &weight;
    std::vector<std::uint32_t> members;
    for (std::uint32_t i = 0; i < weight.size(); ++i) {
      if (weight[i] > 0) members.push_back(i);
    }
    SurvivalTree tree;
    grow(tree, std::move(members), 0);
    return tree;
  }

 private:
  int grow(SurvivalTree& tree, std::vector<std::uint32_t> members, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const NodeTallies tallies = tally(data_, members, *weight_);

    double size = 0.0;
    for (auto m : members) size += (*weight_)[m];
    const bool depth_exhausted = options_.max_depth && depth >= *options_.max_depth;
    SplitChoice best;
    if (!depth_exhausted && size >= options_.min_samples_split && !tallies.event_times.empty()) {
      best = best_split(members, tallies);
    }
    if (best.feature < 0) {
      tree.nodes[static_cast<std::size_t>(id)].leaf = static_cast<int>(tree.leaves.size());
      tree.leaves.push_back(make_leaf(tallies, grid_));
      return id;
    }

    std::vector<std::uint32_t> left;
    std::vector<std::uint32_t> right;
    const auto f = static_cast<std::size_t>(best.feature);
    for (auto m : members) {
      (data_.value(m, f) <= best.threshold ? left : right).push_back(m);
    }
    members.clear();
    members.shrink_to_fit();
    const int l = grow(tree, std::move(left), depth + 1);
    const int r = grow(tree, std::move(right), depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::vector<std::size_t> sample_features() {
    std::vector<std::size_t> all(data_.p);
    std::iota(all.begin(), all.end(), 0);
    const auto mtry = static_cast<std::size_t>(options_.mtry);
    for (std::size_t i = 0; i < mtry; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
      std::swap(all[i], all[pick(rng_)]);
    }
    all.resize(mtry);
    std::sort(all.begin(), all.end());
    return all;
  }

  SplitChoice best_split(const std::vector<std::uint32_t>& members, const NodeTallies& t) {
    const auto& w = *weight_;
    const std::size_t k = t.event_times.size();

    // Log-rank score of each member: delta_i - H_node(time_i).
    std::vector<double> cum_hazard(k + 1, 0.0);
    std::vector<double> var_coef(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      cum_hazard[i + 1] = cum_hazard[i] + t.deaths[i] / t.at_risk[i];
      if (t.at_risk[i] > 1.0) {
        var_coef[i] = t.deaths[i] * (t.at_risk[i] - t.deaths[i]) / (t.at_risk[i] - 1.0);
      }
    }
    double total_w = 0.0;
    double total_events = 0.0;
    for (auto m : members) {
      total_w += w[m];
      if (data_.event[m]) total_events += w[m];
    }

    SplitChoice best;
    std::vector<std::size_t> order(members.size());
    std::vector<double> left_leaving(k + 1, 0.0);
    for (std::size_t f : sample_features()) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = data_.value(members[a], f);
        const double vb = data_.value(members[b], f);
        return va < vb || (va == vb && members[a] < members[b]);
      });
      std::fill(left_leaving.begin(), left_leaving.end(), 0.0);
      double left_w = 0.0;
      double left_events = 0.0;
      double numerator = 0.0;
      for (std::size_t j = 0; j + 1 < order.size(); ++j) {
        const std::size_t local = order[j];
        const auto m = members[local];
        const double wm = w[m];
        const std::uint32_t s = t.slot[local];
        left_w += wm;
        left_leaving[s] += wm;
        if (data_.event[m]) {
          left_events += wm;
          numerator += wm * (1.0 - cum_hazard[s]);
        } else {
          numerator -= wm * cum_hazard[s];
        }
        const double here = data_.value(m, f);
        const double next = data_.value(members[order[j + 1]], f);
        if (!(here < next)) continue;
        if (left_w < options_.min_samples_leaf || total_w - left_w < options_.min_samples_leaf) {
          continue;
        }
        if (left_events < options_.min_events_leaf ||
            total_events - left_events < options_.min_events_leaf) {
          continue;
        }
        double variance = 0.0;
        double left_at_risk = 0.0;
        for (std::size_t s2 = k + 1; s2-- > 1;) {
          left_at_risk += left_leaving[s2];
          const double share = left_at_risk / t.at_risk[s2 - 1];
          variance += var_coef[s2 - 1] * share * (1.0 - share);
        }
        if (!(variance > 0.0)) continue;
        const double statistic = std::abs(numerator) / std::sqrt(variance);
        if (statistic > best.statistic) {
          double threshold = here + (next - here) / 2.0;
          if (!(threshold < next)) threshold = here;
          best = {static_cast<int>(f), threshold, statistic};
        }
      }
    }
    return best;
  }

  const TrainingView& data_;
  const std::vector<double>& grid_;
  const RsfOptions& options_;
  std::mt19937_64& rng_;
  const std::vector<std::uint32_t>* weight_ = nullptr;
};

std::mt19937_64 tree_rng(std::uint64_t seed, std::size_t tree_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tree_index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(tree_index) >> 32)};
  return std::mt19937_64(seq);
}

// Sorting key that makes fitting independent of the input row order.
std::vector<std::size_t> canonical_order(const Dataset& d) {
  std::vector<std::size_t> order(d.n());
  std::iota(order.begin(), order.end(), 0);
  if (d.has_ids()) {
    const auto& ids = d.sample_ids();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& sa = d[a];
      const auto& sb = d[b];
      if (sa.time != sb.time) return sa.time < sb.time;
      if (sa.event != sb.event) return sa.event < sb.event;
      return sa.covariates < sb.covariates;
    });
  }
  return order;
}

void check_x(const SurvivalForest& f, std::span<const double> x) {
  if (x.size() != f.p()) {
    throw DataError("covariate vector has " + std::to_string(x.size()) + " entries, forest expects " +
                    std::to_string(f.p()));
  }
}

void accumulate_increments(const LeafEstimate& leaf, std::vector<double>& acc) {
  for (std::size_t k = 0; k < leaf.grid_index.size(); ++k) acc[leaf.grid_index[k]] += leaf.increments[k];
}

// Mean of several trees' cumulative hazards from their summed increments.
std::vector<double> mean_chf(std::vector<double> acc, double n_trees) {
  double running = 0.0;
  for (double& v : acc) {
    running += v;
    v = running / n_trees;
  }
  return acc;
}

}  // namespace

std::vector<double> LeafEstimate::chf(std::size_t grid_size) const {
  std::vector<double> out(grid_size, 0.0);
  double running = 0.0;
  std::size_t k = 0;
  for (std::size_t g = 0; g < grid_size; ++g) {
    if (k < grid_index.size() && grid_index[k] == g) running += increments[k++];
    out[g] = running;
  }
  return out;
}

const LeafEstimate& SurvivalTree::route(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (node->leaf < 0) {
    const auto f = static_cast<std::size_t>(node->feature);
    node = &nodes[static_cast<std::size_t>(x[f] <= node->threshold ? node->left : node->right)];
  }
  return leaves[static_cast<std::size_t>(node->leaf)];
}

CumulativeHazard nelson_aalen(std::span<const double> times, const std::vector<bool>& events) {
  if (times.empty()) throw DataError("nelson_aalen: empty input");
  if (times.size() != events.size()) throw DataError("nelson_aalen: length mismatch");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  CumulativeHazard chf;
  double at_risk = static_cast<double>(times.size());
  double total = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = times[order[i]];
    double deaths = 0.0;
    double leaving = 0.0;
    for (; i < order.size() && times[order[i]] == t; ++i) {
      leaving += 1.0;
      if (events[order[i]]) deaths += 1.0;
    }
    if (deaths > 0.0) {
      total += deaths / at_risk;
      chf.times.push_back(t);
      chf.hazard.push_back(total);
    }
    at_risk -= leaving;
  }
  return chf;
}

double logrank_split_statistic(std::span<const double> left_times, const std::vector<bool>& left_events,
                               std::span<const double> right_times,
                               const std::vector<bool>& right_events) {
  if (left_times.size() != left_events.size() || right_times.size() != right_events.size()) {
    throw DataError("logrank: length mismatch");
  }
  if (left_times.empty() || right_times.empty()) throw DataError("logrank: empty group");
  std::vector<double> event_times;
  for (std::size_t i = 0; i < left_times.size(); ++i) {
    if (left_events[i]) event_times.push_back(left_times[i]);
  }
  for (std::size_t i = 0; i < right_times.size(); ++i) {
    if (right_events[i]) event_times.push_back(right_times[i]);
  }
  std::sort(event_times.begin(), event_times.end());
  event_times.erase(std::unique(event_times.begin(), event_times.end()), event_times.end());

  double observed_minus_expected = 0.0;
  double variance = 0.0;
  for (double t : event_times) {
    double n_left = 0.0, d_left = 0.0, n = 0.0, d = 0.0;
    for (std::size_t i = 0; i < left_times.size(); ++i) {
      if (left_times[i] >= t) {
        n_left += 1.0;
        n += 1.0;
      }
      if (left_times[i] == t && left_events[i]) {
        d_left += 1.0;
        d += 1.0;
      }
    }
    for (std::size_t i = 0; i < right_times.size(); ++i) {
      if (right_times[i] >= t) n += 1.0;
      if (right_times[i] == t && right_events[i]) d += 1.0;
    }
    observed_minus_expected += d_left - n_left * d / n;
    if (n > 1.0) variance += (n_left / n) * (1.0 - n_left / n) * (n - d) / (n - 1.0) * d;
  }
  if (!(variance > 0.0)) return 0.0;
  return std::abs(observed_minus_expected) / std::sqrt(variance);
}

SurvivalForest rsf_fit(const Dataset& d, const RsfOptions& options) {
  if (options.n_trees < 1) throw DataError("rsf_fit: n_trees must be >= 1");
  if (d.p() == 0) throw DataError("rsf_fit: no features");
  if (options.min_samples_leaf < 1 || options.min_events_leaf < 1 || options.min_samples_split < 1) {
    throw DataError("rsf_fit: leaf and split minima must be >= 1");
  }
  if (options.max_depth && *options.max_depth < 0) throw DataError("rsf_fit: negative max_depth");

  SurvivalForest forest;
  forest.options = options;
  if (forest.options.mtry == 0) {
    forest.options.mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d.p()))));
  }
  if (forest.options.mtry < 1 || static_cast<std::size_t>(forest.options.mtry) > d.p()) {
    throw DataError("rsf_fit: mtry must lie in [1, p]");
  }
  forest.feature_names = d.feature_names();

  for (const auto& s : d.samples()) {
    if (s.event) forest.time_grid.push_back(s.time);
  }
  if (forest.time_grid.empty()) throw DataError("rsf_fit: no events in dataset");
  std::sort(forest.time_grid.begin(), forest.time_grid.end());
  forest.time_grid.erase(std::unique(forest.time_grid.begin(), forest.time_grid.end()),
                         forest.time_grid.end());

  const auto order = canonical_order(d);
  TrainingView view;
  view.n = d.n();
  view.p = d.p();
  view.x.reserve(view.n * view.p);
  for (std::size_t pos : order) {
    const auto& s = d[pos];
    view.x.insert(view.x.end(), s.covariates.begin(), s.covariates.end());
    view.time.push_back(s.time);
    view.event.push_back(s.event);
  }

  const auto n_trees = static_cast<std::size_t>(options.n_trees);
  forest.trees.resize(n_trees);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    for (std::size_t t = next++; t < n_trees; t = next++) {
      try {
        auto rng = tree_rng(options.seed, t);
        std::vector<std::uint32_t> weight(view.n, 0);
        std::uniform_int_distribution<std::size_t> draw(0, view.n - 1);
        for (std::size_t i = 0; i < view.n; ++i) ++weight[draw(rng)];
        TreeBuilder builder(view, forest.time_grid, forest.options, rng);
        SurvivalTree tree = builder.build(weight);
        tree.inbag.assign(view.n, 0);
        for (std::size_t c = 0; c < view.n; ++c) tree.inbag[order[c]] = weight[c];
        forest.trees[t] = std::move(tree);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  std::size_t workers = options.n_threads > 0 ? static_cast<std::size_t>(options.n_threads)
                                              : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n_trees);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return forest;
}

CumulativeHazard rsf_predict_chf(const SurvivalForest& f, std::span<const double> x) {
  check_x(f, x);
  std::vector<double> acc(f.time_grid.size(), 0.0);
  for (const auto& tree : f.trees) accumulate_increments(tree.route(x), acc);
  return {f.time_grid, mean_chf(std::move(acc), static_cast<double>(f.trees.size()))};
}

double rsf_risk_score(const SurvivalForest& f, std::span<const double> x) {
  const auto chf = rsf_predict_chf(f, x);
  return std::accumulate(chf.hazard.begin(), chf.hazard.end(), 0.0);
}

OobResult rsf_oob_cindex(const SurvivalForest& f, const Dataset& d) {
  if (d.p() != f.p()) throw DataError("rsf_oob_cindex: feature count mismatch");
  for (const auto& tree : f.trees) {
    if (tree.inbag.size() != d.n()) throw DataError("rsf_oob_cindex: dataset is not the training set");
  }
  OobResult out;
  std::vector<double> times;
  std::vector<bool> events;
  std::vector<double> risks;
  for (std::size_t i = 0; i < d.n(); ++i) {
    std::vector<double> acc(f.time_grid.size(), 0.0);
    std::size_t used = 0;
    for (const auto& tree : f.trees) {
      if (tree.inbag[i] != 0) continue;
      accumulate_increments(tree.route(d[i].covariates), acc);
      ++used;
    }
    if (used == 0) {
      ++out.n_excluded;
      continue;
    }
    const auto chf = mean_chf(std::move(acc), static_cast<double>(used));
    times.push_back(d[i].time);
    events.push_back(d[i].event);
    risks.push_back(std::accumulate(chf.begin(), chf.end(), 0.0));
  }
  out.n_included = times.size();
  if (out.n_included == 0) throw DataError("rsf_oob_cindex: no sample is out-of-bag for any tree");
  out.concordance = concordance_index(times, events, risks);
  return out;
}

std::string rsf_to_json(const SurvivalForest& f) {
  using nlohmann::json;
  json j;
  j["format"] = "survkit-rsf";
  j["version"] = kModelVersion;
  const auto& o = f.options;
  j["options"] = {{"n_trees", o.n_trees},
                  {"mtry", o.mtry},
                  {"min_samples_split", o.min_samples_split},
                  {"min_samples_leaf", o.min_samples_leaf},
                  {"min_events_leaf", o.min_events_leaf},
                  {"max_depth", o.max_depth ? json(*o.max_depth) : json(nullptr)},
                  {"seed", o.seed}};
  j["feature_names"] = f.feature_names;
  j["time_grid"] = f.time_grid;
  json trees = json::array();
  for (const auto& tree : f.trees) {
    json nodes = {{"feature", json::array()}, {"threshold", json::array()}, {"left", json::array()},
                  {"right", json::array()},   {"leaf", json::array()}};
    for (const auto& node : tree.nodes) {
      nodes["feature"].push_back(node.feature);
      nodes["threshold"].push_back(node.threshold);
      nodes["left"].push_back(node.left);
      nodes["right"].push_back(node.right);
      nodes["leaf"].push_back(node.leaf);
    }
    json leaves = json::array();
    for (const auto& leaf : tree.leaves) {
      leaves.push_back({{"grid_index", leaf.grid_index},
                        {"at_risk", leaf.at_risk},
                        {"events", leaf.events},
                        {"increments", leaf.increments}});
    }
    trees.push_back({{"nodes", nodes}, {"leaves", leaves}, {"inbag", tree.inbag}});
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

SurvivalForest rsf_from_json(const std::string& text) {
  using nlohmann::json;
  SurvivalForest f;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "survkit-rsf") throw DataError("not a survkit forest file");
    if (j.at("version").get<int>() != kModelVersion) {
      throw DataError("unsupported forest file version " + j.at("version").dump());
    }
    const auto& o = j.at("options");
    f.options.n_trees = o.at("n_trees").get<int>();
    f.options.mtry = o.at("mtry").get<int>();
    f.options.min_samples_split = o.at("min_samples_split").get<int>();
    f.options.min_samples_leaf = o.at("min_samples_leaf").get<int>();
    f.options.min_events_leaf = o.at("min_events_leaf").get<int>();
    if (!o.at("max_depth").is_null()) f.options.max_depth = o.at("max_depth").get<int>();
    f.options.seed = o.at("seed").get<std::uint64_t>();
    f.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    f.time_grid = j.at("time_grid").get<std::vector<double>>();
    for (const auto& jt : j.at("trees")) {
      SurvivalTree tree;
      const auto& nodes = jt.at("nodes");
      const auto feature = nodes.at("feature").get<std::vector<int>>();
      const auto threshold = nodes.at("threshold").get<std::vector<double>>();
      const auto left = nodes.at("left").get<std::vector<int>>();
      const auto right = nodes.at("right").get<std::vector<int>>();
      const auto leaf = nodes.at("leaf").get<std::vector<int>>();
      for (std::size_t i = 0; i < feature.size(); ++i) {
        tree.nodes.push_back({feature.at(i), threshold.at(i), left.at(i), right.at(i), leaf.at(i)});
      }
      for (const auto& jl : jt.at("leaves")) {
        LeafEstimate est;
        est.grid_index = jl.at("grid_index").get<std::vector<std::uint32_t>>();
        est.at_risk = jl.at("at_risk").get<std::vector<double>>();
        est.events = jl.at("events").get<std::vector<double>>();
        est.increments = jl.at("increments").get<std::vector<double>>();
        tree.leaves.push_back(std::move(est));
      }
      tree.inbag = jt.at("inbag").get<std::vector<std::uint32_t>>();
      f.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed forest file: ") + e.what());
  }
  if (f.trees.empty() || static_cast<int>(f.trees.size()) != f.options.n_trees) {
    throw DataError("forest file tree count does not match its options");
  }
  for (const auto& tree : f.trees) {
    if (tree.nodes.empty()) throw DataError("forest file contains an empty tree");
    const auto n_nodes = static_cast<int>(tree.nodes.size());
    for (int id = 0; id < n_nodes; ++id) {
      const auto& node = tree.nodes[static_cast<std::size_t>(id)];
      // Children always follow their parent, so routing terminates.
      if (node.leaf >= 0 ? node.leaf >= static_cast<int>(tree.leaves.size())
                         : (node.feature < 0 || node.feature >= static_cast<int>(f.p()) ||
                            node.left <= id || node.right <= id || node.left >= n_nodes ||
                            node.right >= n_nodes)) {
        throw DataError("forest file contains an invalid node");
      }
    }
  }
  return f;
}

}  // namespace survkit
