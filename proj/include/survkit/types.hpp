#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace survkit {

/// One subject: follow-up time in days, event flag (true = death observed,
/// false = right-censored) and a covariate vector.
struct SurvivalSample {
  double time = 0.0;
  bool event = false;
  std::vector<double> covariates;
};

/// Column names plus samples. All samples share the feature count.
class Dataset {
 public:
  Dataset() = default;

  /// Validates shapes, uniqueness of feature names and sample times.
  /// `sample_ids` may be empty; otherwise it must have one entry per sample.
  Dataset(std::vector<std::string> feature_names, std::vector<SurvivalSample> samples,
          std::vector<std::string> sample_ids = {});

  std::size_t n() const noexcept { return samples_.size(); }
  std::size_t p() const noexcept { return feature_names_.size(); }

  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<SurvivalSample>& samples() const noexcept { return samples_; }
  const SurvivalSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
  bool has_ids() const noexcept { return !sample_ids_.empty(); }

  std::vector<double> times() const;
  std::vector<bool> events() const;
  std::vector<double> column(std::size_t j) const;
  std::size_t feature_index(const std::string& name) const;
  std::size_t event_count() const;

  /// Subset by row indices (order preserved as given).
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Keeps only the named features, in the order given.
  Dataset select_features(const std::vector<std::string>& names) const;

 private:
  std::vector<std::string> feature_names_;
  std::vector<SurvivalSample> samples_;
  std::vector<std::string> sample_ids_;
};

/// Right-continuous survival step function. S(t) = 1 before times.front().
struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<double> ci_lower;  // empty when no bounds were computed
  std::vector<double> ci_upper;
  std::vector<double> at_risk;
  std::vector<double> events;
  // Steps where the variance is undefined (S = 0); bounds reported as [0, 0].
  std::vector<bool> ci_degenerate;

  std::size_t size() const noexcept { return times.size(); }
  bool has_ci() const noexcept { return !ci_lower.empty(); }
};

/// Non-decreasing step function H(t), zero before times.front().
struct CumulativeHazard {
  std::vector<double> times;
  std::vector<double> hazard;

  std::size_t size() const noexcept { return times.size(); }
};

/// S at the largest step time <= t, 1 before the first step.
double curve_eval(const SurvivalCurve& curve, double t);

/// H at the largest step time <= t, 0 before the first step.
double chf_eval(const CumulativeHazard& chf, double t);

/// S(t_i) = exp(-H(t_i)) on the same grid.
SurvivalCurve chf_to_survival(const CumulativeHazard& chf);

/// Checks the documented curve invariants; throws DataError on violation.
void validate_curve(const SurvivalCurve& curve);
void validate_chf(const CumulativeHazard& chf);

}  // namespace survkit
