#include "survkit/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "survkit/error.hpp"

namespace survkit {

Dataset::Dataset(std::vector<std::string> feature_names, std::vector<SurvivalSample> samples,
                 std::vector<std::string> sample_ids)
    : feature_names_(std::move(feature_names)),
      samples_(std::move(samples)),
      sample_ids_(std::move(sample_ids)) {
  std::unordered_set<std::string> seen;
  for (const auto& name : feature_names_) {
    if (!seen.insert(name).second) throw DataError("duplicate feature name '" + name + "'");
  }
  if (!sample_ids_.empty() && sample_ids_.size() != samples_.size()) {
    throw DataError("sample id count does not match sample count");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.time) || s.time < 0.0) {
      throw DataError("sample " + std::to_string(i) + " has invalid time");
    }
    if (s.covariates.size() != feature_names_.size()) {
      throw DataError("sample " + std::to_string(i) + " has " +
                      std::to_string(s.covariates.size()) + " covariates, expected " +
                      std::to_string(feature_names_.size()));
    }
  }
}

std::vector<double> Dataset::times() const {
  std::vector<double> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.time);
  return out;
}

std::vector<bool> Dataset::events() const {
  std::vector<bool> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.event);
  return out;
}

std::vector<double> Dataset::column(std::size_t j) const {
  std::vector<double> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.covariates.at(j));
  return out;
}

std::size_t Dataset::feature_index(const std::string& name) const {
  auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
  if (it == feature_names_.end()) throw DataError("unknown feature '" + name + "'");
  return static_cast<std::size_t>(it - feature_names_.begin());
}

std::size_t Dataset::event_count() const {
  return static_cast<std::size_t>(
      std::count_if(samples_.begin(), samples_.end(), [](const auto& s) { return s.event; }));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<SurvivalSample> samples;
  std::vector<std::string> ids;
  samples.reserve(rows.size());
  for (std::size_t r : rows) {
    samples.push_back(samples_.at(r));
    if (has_ids()) ids.push_back(sample_ids_[r]);
  }
  return Dataset(feature_names_, std::move(samples), std::move(ids));
}

Dataset Dataset::select_features(const std::vector<std::string>& names) const {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& name : names) idx.push_back(feature_index(name));
  std::vector<SurvivalSample> samples;
  samples.reserve(samples_.size());
  for (const auto& s : samples_) {
    SurvivalSample copy{s.time, s.event, {}};
    copy.covariates.reserve(idx.size());
    for (std::size_t j : idx) copy.covariates.push_back(s.covariates[j]);
    samples.push_back(std::move(copy));
  }
  return Dataset(names, std::move(samples), sample_ids_);
}

namespace {

template <typename Times>
std::ptrdiff_t step_index(const Times& times, double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  return static_cast<std::ptrdiff_t>(it - times.begin()) - 1;
}

}  // namespace

double curve_eval(const SurvivalCurve& curve, double t) {
  auto k = step_index(curve.times, t);
  return k < 0 ? 1.0 : curve.survival[static_cast<std::size_t>(k)];
}

double chf_eval(const CumulativeHazard& chf, double t) {
  auto k = step_index(chf.times, t);
  return k < 0 ? 0.0 : chf.hazard[static_cast<std::size_t>(k)];
}

SurvivalCurve chf_to_survival(const CumulativeHazard& chf) {
  SurvivalCurve curve;
  curve.times = chf.times;
  curve.survival.reserve(chf.size());
  for (double h : chf.hazard) curve.survival.push_back(std::exp(-h));
  return curve;
}

void validate_curve(const SurvivalCurve& curve) {
  const auto n = curve.times.size();
  if (curve.survival.size() != n) throw DataError("curve: survival length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    double s = curve.survival[i];
    if (!(s >= 0.0 && s <= 1.0)) throw DataError("curve: survival outside [0, 1]");
    if (i > 0) {
      if (!(curve.times[i] > curve.times[i - 1])) throw DataError("curve: times not increasing");
      if (s > curve.survival[i - 1]) throw DataError("curve: survival increases");
    }
    if (curve.has_ci() && (curve.ci_lower[i] > s || curve.ci_upper[i] < s)) {
      throw DataError("curve: confidence bounds do not bracket survival");
    }
  }
}

void validate_chf(const CumulativeHazard& chf) {
  if (chf.hazard.size() != chf.times.size()) throw DataError("chf: hazard length mismatch");
  for (std::size_t i = 0; i < chf.size(); ++i) {
    if (!(chf.hazard[i] >= 0.0)) throw DataError("chf: negative hazard");
    if (i > 0 && (!(chf.times[i] > chf.times[i - 1]) || chf.hazard[i] < chf.hazard[i - 1])) {
      throw DataError("chf: not a non-decreasing step function");
    }
  }
}

}  // namespace survkit
