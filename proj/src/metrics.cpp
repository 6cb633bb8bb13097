#include "survkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "survkit/error.hpp"

namespace survkit {

namespace {

// Counts inserted risk ranks; prefix sums over rank positions.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}

  void add(std::size_t pos) {
    for (std::size_t i = pos + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }

  // Number of inserted ranks strictly below `pos`.
  std::int64_t below(std::size_t pos) const {
    std::int64_t sum = 0;
    for (std::size_t i = pos; i > 0; i -= i & (~i + 1)) sum += tree_[i];
    return sum;
  }

 private:
  std::vector<std::int64_t> tree_;
};

void check_lengths(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || a != c) throw DataError("times, events and risks must have equal lengths");
}

}  // namespace

ConcordanceResult concordance_index(std::span<const double> times, const std::vector<bool>& events,
                                    std::span<const double> risks) {
  check_lengths(times.size(), events.size(), risks.size());
  const std::size_t n = times.size();
  if (n < 2) throw DataError("concordance_index: need at least two subjects");

  // Dense ranks of the risk scores.
  std::vector<double> distinct(risks.begin(), risks.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), risks[i]) - distinct.begin());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return times[a] > times[b];
  });

  // Sweep from the longest time down. When a block of equal times is reached,
  // the tree holds exactly the subjects with strictly longer times.
  Fenwick tree(distinct.size());
  std::int64_t inserted = 0;
  ConcordanceResult r;
  for (std::size_t i = 0; i < n;) {
    std::size_t end = i;
    while (end < n && times[order[end]] == times[order[i]]) ++end;
    for (std::size_t k = i; k < end; ++k) {
      const std::size_t s = order[k];
      if (!events[s]) continue;
      const std::int64_t lower = tree.below(rank[s]);
      const std::int64_t not_higher = tree.below(rank[s] + 1);
      r.concordant += lower;
      r.tied_risk += not_higher - lower;
      r.discordant += inserted - not_higher;
    }
    for (std::size_t k = i; k < end; ++k) {
      tree.add(rank[order[k]]);
      ++inserted;
    }
    i = end;
  }
  r.usable_pairs = r.concordant + r.discordant + r.tied_risk;
  if (r.usable_pairs == 0) throw DataError("concordance_index: no usable pairs");
  r.c_index = (static_cast<double>(r.concordant) + 0.5 * static_cast<double>(r.tied_risk)) /
              static_cast<double>(r.usable_pairs);
  return r;
}

RocResult roc_curve(const std::vector<bool>& positive, std::span<const double> risks) {
  if (positive.size() != risks.size()) throw DataError("labels and risks must have equal lengths");
  RocResult out;
  for (bool pos : positive) (pos ? out.n_positive : out.n_negative)++;
  if (out.n_positive == 0) throw DataError("ROC: no positive subjects");
  if (out.n_negative == 0) throw DataError("ROC: no negative subjects");

  std::vector<std::size_t> order(risks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return risks[a] > risks[b];
  });

  const double np = static_cast<double>(out.n_positive);
  const double nn = static_cast<double>(out.n_negative);
  out.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = risks[order[i]];
    for (; i < order.size() && risks[order[i]] == threshold; ++i) {
      (positive[order[i]] ? tp : fp)++;
    }
    out.points.push_back({threshold, static_cast<double>(fp) / nn, static_cast<double>(tp) / np});
  }
  out.auc = trapezoid_auc(out.points);
  return out;
}

RocResult roc_at_horizon(std::span<const double> times, const std::vector<bool>& events,
                         std::span<const double> risks, double horizon) {
  check_lengths(times.size(), events.size(), risks.size());
  if (!(horizon > 0.0)) throw DataError("ROC: horizon must be positive");
  std::vector<bool> labels;
  std::vector<double> kept;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > horizon) {
      labels.push_back(false);
    } else if (events[i]) {
      labels.push_back(true);
    } else {
      ++excluded;
      continue;
    }
    kept.push_back(risks[i]);
  }
  RocResult out = roc_curve(labels, kept);
  out.horizon = horizon;
  out.n_excluded = excluded;
  return out;
}

double trapezoid_auc(const std::vector<RocPoint>& points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return area;
}

double rank_auc(const std::vector<bool>& positive, std::span<const double> risks) {
  if (positive.size() != risks.size()) throw DataError("labels and risks must have equal lengths");
  const std::size_t n = risks.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return risks[a] < risks[b];
  });
  double positive_rank_sum = 0.0;
  double np = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t end = i;
    while (end < n && risks[order[end]] == risks[order[i]]) ++end;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t k = i; k < end; ++k) {
      if (positive[order[k]]) {
        positive_rank_sum += mid_rank;
        np += 1.0;
      }
    }
    i = end;
  }
  const double nn = static_cast<double>(n) - np;
  if (np == 0.0 || nn == 0.0) throw DataError("AUC: need both positive and negative subjects");
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

}  // namespace survkit
