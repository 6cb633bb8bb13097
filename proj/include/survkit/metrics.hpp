#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace survkit {

/// Harrell-style concordance tallies.
///
/// A pair is usable when one subject has a strictly smaller observed time and
/// that subject had an event. Pairs with equal times are never usable. Among
/// usable pairs, the shorter-lived subject having the strictly higher risk is
/// concordant; equal risks count as `tied_risk` and earn half credit.
struct ConcordanceResult {
  double c_index = 0.0;
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t tied_risk = 0;
  std::int64_t usable_pairs = 0;
};

/// O(n log n) pair counting. Throws DataError when no pair is usable.
ConcordanceResult concordance_index(std::span<const double> times, const std::vector<bool>& events,
                                    std::span<const double> risks);

struct RocPoint {
  double threshold;  // subjects with risk >= threshold are called positive
  double fpr;
  double tpr;
};

/// ROC at a fixed horizon.
///
/// Positive: event with time <= horizon. Negative: time > horizon. Subjects
/// censored at or before the horizon are excluded and counted.
struct RocResult {
  double horizon = 0.0;
  std::vector<RocPoint> points;
  double auc = 0.0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::size_t n_excluded = 0;
};

RocResult roc_at_horizon(std::span<const double> times, const std::vector<bool>& events,
                         std::span<const double> risks, double horizon);

/// Binary ROC from labels. First point is (0, 0) at threshold +inf, last (1, 1).
RocResult roc_curve(const std::vector<bool>& positive, std::span<const double> risks);

/// Trapezoidal area under a list of ROC points.
double trapezoid_auc(const std::vector<RocPoint>& points);

/// Mann-Whitney form of the AUC with mid-ranks for tied scores.
double rank_auc(const std::vector<bool>& positive, std::span<const double> risks);

}  // namespace survkit
