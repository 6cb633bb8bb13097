#include "survkit/km.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "survkit/error.hpp"

namespace survkit {

double normal_critical_value(double confidence_level) {
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw DataError("confidence level must lie strictly between 0 and 1");
  }
  boost::math::normal_distribution<double> normal;
  return boost::math::quantile(normal, 0.5 + confidence_level / 2.0);
}

SurvivalCurve km_fit(std::span<const double> times, const std::vector<bool>& events,
                     const KmOptions& options) {
  if (times.empty()) throw DataError("km_fit: empty input");
  if (times.size() != events.size()) throw DataError("km_fit: times/events length mismatch");
  for (double t : times) {
    if (!std::isfinite(t) || t < 0.0) throw DataError("km_fit: negative or non-finite time");
  }
  const double z = normal_critical_value(options.confidence_level);

  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return times[a] < times[b];
  });

  SurvivalCurve curve;
  double at_risk = static_cast<double>(times.size());
  double survival = 1.0;
  double greenwood = 0.0;
  // Between censorings the product telescopes to anchor_s * n_after / anchor_n,
  // so uncensored data reproduces the empirical survivor function exactly.
  double anchor_s = 1.0;
  double anchor_n = at_risk;

  for (std::size_t i = 0; i < order.size();) {
    const double t = times[order[i]];
    double deaths = 0.0;
    double leaving = 0.0;
    for (; i < order.size() && times[order[i]] == t; ++i) {
      leaving += 1.0;
      if (events[order[i]]) deaths += 1.0;
    }
    if (deaths > 0.0) {
      survival = anchor_s * ((at_risk - deaths) / anchor_n);
      const bool degenerate = deaths >= at_risk;
      if (!degenerate) greenwood += deaths / (at_risk * (at_risk - deaths));

      double lo = 0.0;
      double hi = 0.0;
      if (!degenerate) {
        if (options.ci_method == CiMethod::kLogLog) {
          // Var[log(-log S)] = greenwood / log(S)^2, bounds S^exp(+-z*sigma).
          const double log_s = std::log(survival);
          const double sigma = std::sqrt(greenwood) / std::abs(log_s);
          lo = std::pow(survival, std::exp(z * sigma));
          hi = std::pow(survival, std::exp(-z * sigma));
        } else {
          const double se = survival * std::sqrt(greenwood);
          lo = std::clamp(survival - z * se, 0.0, 1.0);
          hi = std::clamp(survival + z * se, 0.0, 1.0);
        }
      }
      curve.times.push_back(t);
      curve.survival.push_back(survival);
      curve.ci_lower.push_back(std::min(lo, survival));
      curve.ci_upper.push_back(std::max(hi, survival));
      curve.at_risk.push_back(at_risk);
      curve.events.push_back(deaths);
      curve.ci_degenerate.push_back(degenerate);
    }
    at_risk -= leaving;
    if (leaving > deaths) {
      anchor_s = survival;
      anchor_n = at_risk;
    }
  }
  return curve;
}

StratifiedKm km_stratified(const Dataset& d, const std::vector<std::string>& labels,
                           const KmOptions& options,
                           const std::vector<std::string>& required_groups) {
  if (labels.size() != d.n()) throw DataError("km_stratified: one label per sample required");
  std::map<std::string, std::pair<std::vector<double>, std::vector<bool>>> groups;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (labels[i].empty()) throw DataError("km_stratified: sample " + std::to_string(i) +
                                           " has an empty group label");
    auto& [t, e] = groups[labels[i]];
    t.push_back(d[i].time);
    e.push_back(d[i].event);
  }
  for (const auto& name : required_groups) {
    if (!groups.contains(name)) throw DataError("km_stratified: group '" + name + "' is empty");
  }
  StratifiedKm out;
  for (const auto& [label, data] : groups) {
    const auto& [t, e] = data;
    out.curves.emplace(label, km_fit(t, e, options));
    out.group_sizes.emplace(label, t.size());
    out.group_events.emplace(label, static_cast<std::size_t>(std::count(e.begin(), e.end(), true)));
  }
  return out;
}

}  // namespace survkit
