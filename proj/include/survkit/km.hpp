#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "survkit/types.hpp"

namespace survkit {

enum class CiMethod { kLogLog, kLinear };

struct KmOptions {
  double confidence_level = 0.95;
  CiMethod ci_method = CiMethod::kLogLog;
};

/// Kaplan-Meier product-limit estimate with Greenwood confidence bounds.
///
/// Steps occur only at distinct event times. At a time shared by a death and
/// a censoring, the censored subject is still counted in the risk set (deaths
/// precede censorings). Steps where S drops to 0 carry degenerate [0, 0]
/// bounds and are flagged in `ci_degenerate`.
SurvivalCurve km_fit(std::span<const double> times, const std::vector<bool>& events,
                     const KmOptions& options = {});

struct StratifiedKm {
  std::map<std::string, SurvivalCurve> curves;
  std::map<std::string, std::size_t> group_sizes;
  std::map<std::string, std::size_t> group_events;
};

/// One independent km_fit per group label. `labels` has one entry per sample.
/// Every name in `required_groups` must have at least one member.
StratifiedKm km_stratified(const Dataset& d, const std::vector<std::string>& labels,
                           const KmOptions& options = {},
                           const std::vector<std::string>& required_groups = {});

/// Two-sided standard normal quantile for a confidence level, e.g. 1.96 for 0.95.
double normal_critical_value(double confidence_level);

}  // namespace survkit
