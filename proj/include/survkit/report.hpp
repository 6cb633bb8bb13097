#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "survkit/cox.hpp"
#include "survkit/metrics.hpp"
#include "survkit/types.hpp"

namespace survkit {

/// One row of a curve export.
struct CurveRow {
  double time;
  double at_risk;
  double events;
  double survival;
  double ci_lower;
  double ci_upper;
};

/// Evaluates a KM curve on `grid` (plus t = 0). `group_times` are the observed
/// times of the group, used for the number at risk at non-step grid points.
std::vector<CurveRow> curve_rows(const SurvivalCurve& curve, std::span<const double> group_times,
                                 std::span<const double> grid);

using LabeledRows = std::vector<std::pair<std::string, std::vector<CurveRow>>>;

/// CSV: time,at_risk,events,survival,ci_lower,ci_upper,group
void write_curve_csv(std::ostream& out, const LabeledRows& groups);

/// Minimal SVG step plot with confidence bands, one colour per group.
std::string curve_svg(const LabeledRows& groups, const std::string& title);

/// CSV mirroring a coefficient table: coef, exp(coef), se(coef), CI bounds, z, p.
void write_cox_summary_csv(std::ostream& out, const std::vector<CoxSummaryRow>& rows,
                           double confidence);
nlohmann::ordered_json cox_summary_json(const std::vector<CoxSummaryRow>& rows, double confidence);
/// Fixed-width text table with two decimals and "<0.005" for small p-values.
std::string cox_summary_text(const std::vector<CoxSummaryRow>& rows);
std::string format_p_value(double p);

/// CSV: threshold,fpr,tpr
void write_roc_csv(std::ostream& out, const RocResult& roc);

std::string cox_to_json(const CoxModel& m);
CoxModel cox_from_json(const std::string& text);

}  // namespace survkit
