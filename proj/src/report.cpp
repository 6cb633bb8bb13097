#include "survkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "survkit/error.hpp"
#include "survkit/ingest.hpp"

namespace survkit {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string csv_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_number(v);
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::vector<CurveRow> curve_rows(const SurvivalCurve& curve, std::span<const double> group_times,
                                 std::span<const double> grid) {
  std::vector<double> points(grid.begin(), grid.end());
  points.push_back(0.0);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  std::vector<double> sorted_times(group_times.begin(), group_times.end());
  std::sort(sorted_times.begin(), sorted_times.end());

  std::vector<CurveRow> rows;
  rows.reserve(points.size());
  for (double t : points) {
    CurveRow row{t, 0.0, 0.0, 1.0, 1.0, 1.0};
    row.at_risk = static_cast<double>(sorted_times.end() -
                                      std::lower_bound(sorted_times.begin(), sorted_times.end(), t));
    auto it = std::upper_bound(curve.times.begin(), curve.times.end(), t);
    if (it != curve.times.begin()) {
      const auto k = static_cast<std::size_t>(it - curve.times.begin()) - 1;
      row.survival = curve.survival[k];
      if (curve.has_ci()) {
        row.ci_lower = curve.ci_lower[k];
        row.ci_upper = curve.ci_upper[k];
      } else {
        row.ci_lower = row.ci_upper = row.survival;
      }
      if (curve.times[k] == t) row.events = curve.events.empty() ? 0.0 : curve.events[k];
    }
    rows.push_back(row);
  }
  return rows;
}

void write_curve_csv(std::ostream& out, const LabeledRows& groups) {
  out << "time,at_risk,events,survival,ci_lower,ci_upper,group\n";
  for (const auto& [label, rows] : groups) {
    for (const auto& r : rows) {
      out << csv_number(r.time) << ',' << csv_number(r.at_risk) << ',' << csv_number(r.events) << ','
          << csv_number(r.survival) << ',' << csv_number(r.ci_lower) << ','
          << csv_number(r.ci_upper) << ',' << label << '\n';
    }
  }
}

std::string curve_svg(const LabeledRows& groups, const std::string& title) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  double t_max = 1.0;
  for (const auto& [label, rows] : groups) {
    for (const auto& r : rows) t_max = std::max(t_max, r.time);
  }
  auto sx = [&](double t) { return kLeft + t / t_max * (kWidth - kLeft - kRight); };
  auto sy = [&](double s) { return kTop + (1.0 - s) * (kHeight - kTop - kBottom); };
  auto num = [](double v) { return fixed(v, 2); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << sy(0) << "\" x2=\"" << kWidth - kRight << "\" y2=\""
      << sy(0) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << sy(0) << "\" x2=\"" << kLeft << "\" y2=\"" << sy(1)
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double s = k / 4.0;
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(sy(s) + 4) << "\" text-anchor=\"end\">"
        << fixed(s, 2) << "</text>\n";
  }
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">time (days), max " << fixed(t_max, 0) << "</text>\n";

  std::size_t colour = 0;
  for (const auto& [label, rows] : groups) {
    const char* c = kPalette[colour++ % std::size(kPalette)];
    std::ostringstream line, upper, lower;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (i > 0) {
        line << num(sx(r.time)) << ',' << num(sy(rows[i - 1].survival)) << ' ';
        upper << num(sx(r.time)) << ',' << num(sy(rows[i - 1].ci_upper)) << ' ';
      }
      line << num(sx(r.time)) << ',' << num(sy(r.survival)) << ' ';
      upper << num(sx(r.time)) << ',' << num(sy(r.ci_upper)) << ' ';
    }
    for (std::size_t i = rows.size(); i-- > 0;) {
      const auto& r = rows[i];
      lower << num(sx(r.time)) << ',' << num(sy(r.ci_lower)) << ' ';
      if (i > 0) lower << num(sx(r.time)) << ',' << num(sy(rows[i - 1].ci_lower)) << ' ';
    }
    svg << "<polygon points=\"" << upper.str() << lower.str() << "\" fill=\"" << c
        << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    svg << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << c << "\"/>\n";
    svg << "<text x=\"" << kWidth - kRight - 100 << "\" y=\"" << kTop + 16 * static_cast<double>(colour)
        << "\" fill=\"" << c << "\">" << label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string format_p_value(double p) {
  if (p < 0.005) return "<0.005";
  return fixed(p, 2);
}

void write_cox_summary_csv(std::ostream& out, const std::vector<CoxSummaryRow>& rows,
                           double confidence) {
  const std::string pct = format_number(confidence * 100.0);
  out << "feature,coef,exp(coef),se(coef),coef lower " << pct << "%,coef upper " << pct
      << "%,exp(coef) lower " << pct << "%,exp(coef) upper " << pct << "%,z,p\n";
  for (const auto& r : rows) {
    out << r.feature << ',' << csv_number(r.coef) << ',' << csv_number(r.hazard_ratio) << ','
        << csv_number(r.se) << ',' << csv_number(r.ci_low_coef) << ','
        << csv_number(r.ci_high_coef) << ',' << csv_number(r.ci_low_hr) << ','
        << csv_number(r.ci_high_hr) << ',' << csv_number(r.z) << ',' << csv_number(r.p_value)
        << '\n';
  }
}

nlohmann::ordered_json cox_summary_json(const std::vector<CoxSummaryRow>& rows, double confidence) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    out.push_back({{"feature", r.feature},
                   {"coef", r.coef},
                   {"exp_coef", r.hazard_ratio},
                   {"se_coef", r.se},
                   {"confidence", confidence},
                   {"coef_lower", r.ci_low_coef},
                   {"coef_upper", r.ci_high_coef},
                   {"exp_coef_lower", r.ci_low_hr},
                   {"exp_coef_upper", r.ci_high_hr},
                   {"z", r.z},
                   {"p", r.p_value}});
  }
  return out;
}

std::string cox_summary_text(const std::vector<CoxSummaryRow>& rows) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.feature.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %7s %9s %8s %15s %15s %8s %7s\n", static_cast<int>(width),
                "variable", "coef", "exp(coef)", "se(coef)", "CI (coef)", "CI (HR)", "z", "p");
  out << buf;
  for (const auto& r : rows) {
    const std::string ci_coef = fixed(r.ci_low_coef, 2) + " -- " + fixed(r.ci_high_coef, 2);
    const std::string ci_hr = fixed(r.ci_low_hr, 2) + " -- " + fixed(r.ci_high_hr, 2);
    std::snprintf(buf, sizeof(buf), "%-*s %7s %9s %8s %15s %15s %8s %7s\n", static_cast<int>(width),
                  r.feature.c_str(), fixed(r.coef, 2).c_str(), fixed(r.hazard_ratio, 2).c_str(),
                  fixed(r.se, 2).c_str(), ci_coef.c_str(), ci_hr.c_str(), fixed(r.z, 2).c_str(),
                  format_p_value(r.p_value).c_str());
    out << buf;
  }
  return out.str();
}

void write_roc_csv(std::ostream& out, const RocResult& roc) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : roc.points) {
    out << csv_number(p.threshold) << ',' << csv_number(p.fpr) << ',' << csv_number(p.tpr) << '\n';
  }
}

std::string cox_to_json(const CoxModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "survkit-cox";
  j["version"] = 1;
  j["tie_method"] = m.tie_method == TieMethod::kEfron ? "efron" : "breslow";
  j["feature_names"] = m.feature_names;
  j["beta"] = m.beta;
  j["covariance"] = m.covariance;
  j["log_likelihood"] = m.log_likelihood;
  j["null_log_likelihood"] = m.null_log_likelihood;
  j["iterations"] = m.iterations;
  j["baseline"] = {{"times", m.baseline.times}, {"hazard", m.baseline.hazard}};
  j["warnings"] = m.warnings;
  return j.dump();
}

CoxModel cox_from_json(const std::string& text) {
  using nlohmann::json;
  CoxModel m;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "survkit-cox") throw DataError("not a survkit Cox model file");
    if (j.at("version").get<int>() != 1) throw DataError("unsupported Cox model file version");
    m.tie_method = j.at("tie_method") == "breslow" ? TieMethod::kBreslow : TieMethod::kEfron;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.beta = j.at("beta").get<std::vector<double>>();
    m.covariance = j.at("covariance").get<std::vector<double>>();
    m.log_likelihood = j.at("log_likelihood").get<double>();
    m.null_log_likelihood = j.at("null_log_likelihood").get<double>();
    m.iterations = j.at("iterations").get<int>();
    m.baseline.times = j.at("baseline").at("times").get<std::vector<double>>();
    m.baseline.hazard = j.at("baseline").at("hazard").get<std::vector<double>>();
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed Cox model file: ") + e.what());
  }
  if (m.beta.size() != m.feature_names.size() || m.covariance.size() != m.beta.size() * m.beta.size() ||
      m.baseline.times.size() != m.baseline.hazard.size()) {
    throw DataError("Cox model file has inconsistent dimensions");
  }
  return m;
}

}  // namespace survkit
