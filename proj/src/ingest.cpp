#include "survkit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "survkit/error.hpp"

namespace survkit {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

Cell to_cell(const std::string& raw, const std::vector<std::string>& sentinels) {
  std::string v = trim(raw);
  if (std::find(sentinels.begin(), sentinels.end(), v) != sentinels.end()) return std::nullopt;
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

void check_unique_header(const std::vector<std::string>& names) {
  std::unordered_set<std::string> seen;
  for (const auto& name : names) {
    if (!seen.insert(name).second) throw DataError("duplicate column name '" + name + "'");
  }
}

std::string key_of(const RawTable& t, std::size_t row, std::size_t key_idx) {
  const auto& cell = t.rows[row][key_idx];
  if (!cell) throw DataError("row " + std::to_string(row) + " has a missing key");
  return *cell;
}

std::string row_label(const RawTable& t, std::size_t row) {
  if (t.has_column(t.key_column)) {
    const auto& cell = t.rows[row][t.column_index(t.key_column)];
    if (cell) return "row " + std::to_string(row) + " (" + *cell + ")";
  }
  return "row " + std::to_string(row);
}

RawTable keep_rows(const RawTable& t, const std::vector<std::size_t>& rows) {
  RawTable out{t.column_names, {}, t.key_column};
  out.rows.reserve(rows.size());
  for (auto r : rows) out.rows.push_back(t.rows[r]);
  return out;
}

std::vector<double> numeric_column(const RawTable& t, const std::string& column) {
  const auto idx = t.column_index(column);
  std::vector<double> values;
  values.reserve(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const auto& cell = t.rows[r][idx];
    if (!cell) throw DataError("column '" + column + "' has a missing value at " + row_label(t, r));
    auto v = parse_number(*cell);
    if (!v) throw DataError("column '" + column + "' is not numeric at " + row_label(t, r));
    values.push_back(*v);
  }
  return values;
}

// Declared levels, or the sorted observed values when none are declared.
std::vector<std::string> declared_levels(const RawTable& t, const OneHotEncoding& oh) {
  if (!oh.categories.empty()) return oh.categories;
  const auto idx = t.column_index(oh.column);
  std::set<std::string> observed;
  for (const auto& row : t.rows) {
    if (row[idx]) observed.insert(*row[idx]);
  }
  return {observed.begin(), observed.end()};
}

// Levels that receive an indicator column: all but the reference, sorted.
std::vector<std::string> indicator_levels(const RawTable& t, const OneHotEncoding& oh) {
  std::vector<std::string> out;
  for (const auto& level : declared_levels(t, oh)) {
    if (level != oh.reference) out.push_back(level);
  }
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::ordered_json stage_entry(const std::string& name, const RawTable& in, const RawTable& out) {
  return {{"stage", name},
          {"rows_in", in.n_rows()},
          {"rows_out", out.n_rows()},
          {"columns_in", in.n_cols()},
          {"columns_out", out.n_cols()}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Numbers

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_number(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  double v = 0.0;
  auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------------------
// Tables

bool RawTable::has_column(const std::string& name) const {
  return std::find(column_names.begin(), column_names.end(), name) != column_names.end();
}

std::size_t RawTable::column_index(const std::string& name) const {
  auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) throw DataError("column '" + name + "' not found");
  return static_cast<std::size_t>(it - column_names.begin());
}

const Cell& RawTable::at(std::size_t row, const std::string& column) const {
  return rows.at(row).at(column_index(column));
}

RawTable parse_tsv(std::istream& in, const LoadOptions& options) {
  RawTable t;
  t.key_column = options.key_column;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (t.column_names.empty()) {
      if (trim(line).empty()) continue;
      for (auto& name : split_tabs(line)) t.column_names.push_back(trim(name));
      check_unique_header(t.column_names);
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != t.column_names.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(t.column_names.size()) + " cells, found " +
                      std::to_string(fields.size()));
    }
    std::vector<Cell> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(to_cell(f, options.missing_sentinels));
    t.rows.push_back(std::move(row));
  }
  if (t.column_names.empty()) throw DataError("table has no header row");
  return t;
}

RawTable parse_json_records(const std::string& text, const LoadOptions& options) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_array()) throw DataError("JSON input must be an array of records");
  RawTable t;
  t.key_column = options.key_column;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& record : j) {
    if (!record.is_object()) throw DataError("JSON input must be an array of records");
    for (const auto& [name, value] : record.items()) {
      if (index.emplace(name, t.column_names.size()).second) t.column_names.push_back(name);
    }
  }
  for (const auto& record : j) {
    std::vector<Cell> row(t.column_names.size());
    for (const auto& [name, value] : record.items()) {
      Cell& cell = row[index.at(name)];
      if (value.is_null()) continue;
      if (value.is_string()) {
        cell = to_cell(value.get<std::string>(), options.missing_sentinels);
      } else if (value.is_number_integer() || value.is_number_unsigned()) {
        cell = value.dump();
      } else if (value.is_number()) {
        cell = format_number(value.get<double>());
      } else if (value.is_boolean()) {
        cell = value.get<bool>() ? "1" : "0";
      } else {
        throw DataError("unsupported JSON value for field '" + name + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

RawTable load_table(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw DataError("failed reading '" + path.string() + "'");
  const std::string text = buffer.str();

  TableFormat format = options.format;
  if (format == TableFormat::kAuto) {
    const auto first = text.find_first_not_of(" \t\r\n");
    format = first != std::string::npos && text[first] == '[' ? TableFormat::kJsonRecords
                                                              : TableFormat::kTsv;
  }
  try {
    if (format == TableFormat::kJsonRecords) return parse_json_records(text, options);
    std::istringstream stream(text);
    return parse_tsv(stream, options);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

RawTable merge_on_key(const RawTable& a, const RawTable& b) {
  if (a.key_column != b.key_column) throw DataError("tables use different key columns");
  const auto ka = a.column_index(a.key_column);
  const auto kb = b.column_index(b.key_column);

  auto index_keys = [](const RawTable& t, std::size_t k, const char* which) {
    std::unordered_map<std::string, std::size_t> rows;
    std::set<std::string> duplicates;
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
      if (!rows.emplace(key_of(t, r, k), r).second) duplicates.insert(key_of(t, r, k));
    }
    if (!duplicates.empty()) {
      std::string msg = std::string("duplicate keys in ") + which + " table:";
      for (const auto& d : duplicates) msg += " " + d;
      throw DataError(msg);
    }
    return rows;
  };
  index_keys(a, ka, "first");
  const auto b_rows = index_keys(b, kb, "second");

  RawTable out;
  out.key_column = a.key_column;
  out.column_names = a.column_names;
  std::vector<std::ptrdiff_t> from_a(a.n_cols());
  std::iota(from_a.begin(), from_a.end(), 0);
  std::vector<std::size_t> b_to_out(b.n_cols());
  for (std::size_t c = 0; c < b.n_cols(); ++c) {
    auto it = std::find(out.column_names.begin(), out.column_names.end(), b.column_names[c]);
    if (it == out.column_names.end()) {
      b_to_out[c] = out.column_names.size();
      out.column_names.push_back(b.column_names[c]);
    } else {
      b_to_out[c] = static_cast<std::size_t>(it - out.column_names.begin());
    }
  }
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    auto hit = b_rows.find(key_of(a, r, ka));
    if (hit == b_rows.end()) continue;
    std::vector<Cell> row(out.n_cols());
    std::copy(a.rows[r].begin(), a.rows[r].end(), row.begin());
    for (std::size_t c = 0; c < b.n_cols(); ++c) {
      Cell& target = row[b_to_out[c]];
      if (!target) target = b.rows[hit->second][c];
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

RawTable drop_missing_labels(const RawTable& t, const std::string& time_col,
                             const std::string& event_col, std::vector<std::string>* warnings) {
  const auto ti = t.column_index(time_col);
  const auto ei = t.column_index(event_col);
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const auto& tc = t.rows[r][ti];
    const auto& ec = t.rows[r][ei];
    if (!tc || !ec) continue;
    const auto time = parse_number(*tc);
    const auto event = parse_number(*ec);
    const bool time_ok = time && std::isfinite(*time) && *time >= 0.0;
    const bool event_ok = event && (*event == 0.0 || *event == 1.0);
    if (time_ok && event_ok) {
      keep.push_back(r);
    } else if (warnings) {
      warnings->push_back("dropped " + row_label(t, r) + ": unparseable label (" + time_col + "=" +
                          *tc + ", " + event_col + "=" + *ec + ")");
    }
  }
  return keep_rows(t, keep);
}

RawTable drop_empty_columns(const RawTable& t) {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    const bool any = std::any_of(t.rows.begin(), t.rows.end(),
                                 [c](const auto& row) { return row[c].has_value(); });
    if (any || t.column_names[c] == t.key_column) keep.push_back(c);
  }
  RawTable out;
  out.key_column = t.key_column;
  for (auto c : keep) out.column_names.push_back(t.column_names[c]);
  out.rows.reserve(t.n_rows());
  for (const auto& row : t.rows) {
    std::vector<Cell> r;
    r.reserve(keep.size());
    for (auto c : keep) r.push_back(row[c]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Imputation

ImputeModel fit_impute(const RawTable& t, const std::vector<std::string>& columns,
                       const std::vector<std::size_t>& fit_rows) {
  ImputeModel m;
  for (const auto& column : columns) {
    const auto idx = t.column_index(column);
    std::vector<double> values;
    for (auto r : fit_rows) {
      const auto& cell = t.rows.at(r)[idx];
      if (!cell) continue;
      auto v = parse_number(*cell);
      if (!v) throw DataError("column '" + column + "' is not numeric at " + row_label(t, r));
      values.push_back(*v);
    }
    if (values.empty()) throw DataError("column '" + column + "' has no values to impute from");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median = n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    m.medians.emplace_back(column, median);
  }
  return m;
}

RawTable apply_impute(const RawTable& t, const ImputeModel& m) {
  RawTable out = t;
  for (const auto& [column, median] : m.medians) {
    const auto idx = out.column_index(column);
    const std::string text = format_number(median);
    for (auto& row : out.rows) {
      if (!row[idx]) row[idx] = text;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Encoding

void PreprocessSpec::validate() const {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw DataError("split_ratio must lie in (0, 1)");
  if (!(iqr_multiplier > 0.0)) throw DataError("iqr_multiplier must be positive");
  for (const auto& oh : one_hot) {
    if (oh.reference.empty()) throw DataError("one-hot column '" + oh.column + "' has no reference");
  }
}

std::vector<std::string> PreprocessSpec::output_features(const RawTable& raw) const {
  std::vector<std::string> out = numeric_features;
  for (const auto& le : label_encode) {
    out.push_back(le.output_column.empty() ? le.column + "_encoded" : le.output_column);
  }
  for (const auto& oh : one_hot) {
    for (const auto& level : indicator_levels(raw, oh)) out.push_back(oh.column + "_" + level);
  }
  return out;
}

RawTable encode_categoricals(const RawTable& t, const PreprocessSpec& spec) {
  RawTable out = t;
  for (const auto& le : spec.label_encode) {
    const auto idx = out.column_index(le.column);
    for (std::size_t r = 0; r < out.n_rows(); ++r) {
      auto& cell = out.rows[r][idx];
      if (!cell) continue;
      auto hit = le.mapping.find(*cell);
      if (hit == le.mapping.end()) {
        throw DataError("column '" + le.column + "': unmapped value '" + *cell + "' at " +
                        row_label(out, r));
      }
      cell = std::to_string(hit->second);
    }
    out.column_names[idx] = le.output_column.empty() ? le.column + "_encoded" : le.output_column;
  }
  for (const auto& oh : spec.one_hot) {
    const auto idx = out.column_index(oh.column);
    const std::vector<std::string> levels = declared_levels(out, oh);
    const std::vector<std::string> indicators = indicator_levels(out, oh);

    RawTable next;
    next.key_column = out.key_column;
    for (std::size_t c = 0; c < out.n_cols(); ++c) {
      if (c != idx) next.column_names.push_back(out.column_names[c]);
    }
    for (const auto& level : indicators) next.column_names.push_back(oh.column + "_" + level);
    check_unique_header(next.column_names);
    for (std::size_t r = 0; r < out.n_rows(); ++r) {
      const auto& cell = out.rows[r][idx];
      if (cell && *cell != oh.reference &&
          std::find(levels.begin(), levels.end(), *cell) == levels.end()) {
        throw DataError("column '" + oh.column + "': unmapped value '" + *cell + "' at " +
                        row_label(out, r));
      }
      std::vector<Cell> row;
      row.reserve(next.n_cols());
      for (std::size_t c = 0; c < out.n_cols(); ++c) {
        if (c != idx) row.push_back(out.rows[r][c]);
      }
      for (const auto& level : indicators) {
        row.push_back(cell ? Cell(*cell == level ? "1" : "0") : Cell());
      }
      next.rows.push_back(std::move(row));
    }
    out = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Outliers

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

IqrFences iqr_fences(const RawTable& t, const std::string& column, double multiplier) {
  if (!(multiplier > 0.0)) throw DataError("IQR multiplier must be positive");
  const auto values = numeric_column(t, column);
  IqrFences f;
  f.q1 = quantile_linear(values, 0.25);
  f.q3 = quantile_linear(values, 0.75);
  f.iqr = f.q3 - f.q1;
  f.lower = f.q1 - multiplier * f.iqr;
  f.upper = f.q3 + multiplier * f.iqr;
  return f;
}

RawTable remove_outliers_iqr(const RawTable& t, const std::string& column, double multiplier) {
  if (t.n_rows() == 0) return t;
  const auto fences = iqr_fences(t, column, multiplier);
  const auto values = numeric_column(t, column);
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (values[r] >= fences.lower && values[r] <= fences.upper) keep.push_back(r);
  }
  return keep_rows(t, keep);
}

// ---------------------------------------------------------------------------
// Splitting and grouping

SplitIndices stratified_split_indices(const std::vector<bool>& events, double ratio,
                                      std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw DataError("split ratio must lie in (0, 1)");
  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < events.size(); ++i) strata[events[i] ? 1 : 0].push_back(i);
  for (int s = 0; s < 2; ++s) {
    if (strata[s].size() < 2) {
      throw DataError(std::string("stratum '") + (s ? "event" : "censored") + "' has " +
                      std::to_string(strata[s].size()) + " members, need at least 2");
    }
  }

  // Largest-remainder apportionment of round(ratio * n) training slots.
  const auto total = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(events.size())));
  std::size_t take[2];
  double remainder[2];
  for (int s = 0; s < 2; ++s) {
    const double exact = ratio * static_cast<double>(strata[s].size());
    take[s] = static_cast<std::size_t>(std::floor(exact));
    remainder[s] = exact - std::floor(exact);
  }
  std::size_t assigned = take[0] + take[1];
  while (assigned < total) {
    const int s = remainder[1] > remainder[0] ? 1 : 0;
    ++take[s];
    remainder[s] = -1.0;
    ++assigned;
  }
  for (int s = 0; s < 2; ++s) take[s] = std::clamp<std::size_t>(take[s], 1, strata[s].size() - 1);

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  SplitIndices out;
  for (int s = 0; s < 2; ++s) {
    auto members = strata[s];
    std::shuffle(members.begin(), members.end(), rng);
    out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take[s]));
    out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(take[s]), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double ratio, std::uint64_t seed) {
  const auto idx = stratified_split_indices(d.events(), ratio, seed);
  return {d.subset(idx.train), d.subset(idx.test)};
}

std::vector<std::string> bin_age_groups(const std::vector<double>& ages,
                                        const std::vector<double>& edges) {
  if (edges.size() < 2) throw DataError("age binning needs at least two edges");
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw DataError("age bin edges must be strictly increasing");
  }
  std::vector<std::string> names;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double lo = k == 0 ? edges[0] : edges[k] + 1.0;
    names.push_back(format_number(lo) + "-" + format_number(edges[k + 1]));
  }
  std::vector<std::string> labels;
  labels.reserve(ages.size());
  for (double age : ages) {
    if (!(age >= 0.0)) throw DataError("negative or invalid age " + format_number(age));
    if (age < edges.front() || age > edges.back()) {
      throw DataError("age " + format_number(age) + " outside the bin edges");
    }
    std::size_t k = 0;
    while (age > edges[k + 1]) ++k;
    labels.push_back(names[k]);
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Dataset conversion and the full pipeline

Dataset table_to_dataset(const RawTable& t, const std::string& time_col, const std::string& event_col,
                         const std::vector<std::string>& features) {
  const auto times = numeric_column(t, time_col);
  const auto events = numeric_column(t, event_col);
  std::vector<std::vector<double>> columns;
  for (const auto& f : features) columns.push_back(numeric_column(t, f));
  std::vector<std::string> ids;
  if (t.has_column(t.key_column)) {
    const auto k = t.column_index(t.key_column);
    for (std::size_t r = 0; r < t.n_rows(); ++r) ids.push_back(key_of(t, r, k));
  }
  std::vector<SurvivalSample> samples;
  samples.reserve(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    if (events[r] != 0.0 && events[r] != 1.0) {
      throw DataError("event label must be 0 or 1 at " + row_label(t, r));
    }
    SurvivalSample s{times[r], events[r] == 1.0, {}};
    for (const auto& col : columns) s.covariates.push_back(col[r]);
    samples.push_back(std::move(s));
  }
  return Dataset(features, std::move(samples), std::move(ids));
}

PreprocessResult preprocess(const RawTable& merged, const PreprocessSpec& spec) {
  spec.validate();
  using nlohmann::ordered_json;
  ordered_json stages = ordered_json::array();
  std::vector<std::string> warnings;

  RawTable t0 = drop_empty_columns(merged);
  stages.push_back(stage_entry("drop_empty_columns", merged, t0));

  RawTable t1 = drop_missing_labels(t0, spec.time_column, spec.event_column, &warnings);
  stages.push_back(stage_entry("drop_missing_labels", t0, t1));

  RawTable t2 = encode_categoricals(t1, spec);
  stages.push_back(stage_entry("encode_categoricals", t1, t2));

  const auto features = spec.output_features(t1);
  for (const auto& f : features) {
    if (!t2.has_column(f)) throw DataError("feature column '" + f + "' is absent after cleaning");
  }

  if (t2.n_rows() == 0) throw DataError("no rows left after label cleaning");
  const IqrFences fences = iqr_fences(t2, spec.outlier_column, spec.iqr_multiplier);
  RawTable t3 = remove_outliers_iqr(t2, spec.outlier_column, spec.iqr_multiplier);
  stages.push_back(stage_entry("remove_outliers_iqr", t2, t3));

  std::vector<bool> events;
  for (double e : numeric_column(t3, spec.event_column)) events.push_back(e == 1.0);
  const SplitIndices split = stratified_split_indices(events, spec.split_ratio, spec.seed);

  std::vector<std::size_t> fit_rows = split.train;
  if (spec.impute_on_full_table) {
    fit_rows.resize(t3.n_rows());
    std::iota(fit_rows.begin(), fit_rows.end(), 0);
  }
  std::map<std::string, std::size_t> missing_counts;
  for (const auto& f : features) {
    const auto idx = t3.column_index(f);
    missing_counts[f] = static_cast<std::size_t>(std::count_if(
        t3.rows.begin(), t3.rows.end(), [idx](const auto& row) { return !row[idx].has_value(); }));
  }
  const ImputeModel impute = fit_impute(t3, features, fit_rows);
  RawTable t4 = apply_impute(t3, impute);
  stages.push_back(stage_entry("impute_median", t3, t4));

  PreprocessResult result{table_to_dataset(t4, spec.time_column, spec.event_column, features), split, {}};

  ordered_json encodings = ordered_json::object();
  for (const auto& le : spec.label_encode) {
    ordered_json map = ordered_json::object();
    for (const auto& [k, v] : le.mapping) map[k] = v;
    encodings[le.output_column.empty() ? le.column + "_encoded" : le.output_column] = {
        {"source", le.column}, {"kind", "label"}, {"mapping", map}};
  }
  for (const auto& oh : spec.one_hot) {
    ordered_json cols = ordered_json::array();
    for (const auto& level : indicator_levels(t1, oh)) cols.push_back(oh.column + "_" + level);
    encodings[oh.column] = {{"kind", "one_hot"}, {"reference", oh.reference}, {"columns", cols}};
  }
  ordered_json medians = ordered_json::object();
  for (const auto& [column, median] : impute.medians) {
    medians[column] = {{"median", median}, {"missing_before", missing_counts[column]}};
  }

  auto& a = result.audit;
  a["stage_order"] = {"drop_empty_columns", "drop_missing_labels", "encode_categoricals",
                      "remove_outliers_iqr", "stratified_split", "impute_median"};
  a["stages"] = stages;
  a["labels"] = {{"time", spec.time_column}, {"event", spec.event_column}};
  a["encodings"] = encodings;
  a["iqr"] = {{"column", spec.outlier_column},
              {"multiplier", spec.iqr_multiplier},
              {"quantile_method", "linear interpolation of order statistics (type 7)"},
              {"q1", fences.q1},
              {"q3", fences.q3},
              {"iqr", fences.iqr},
              {"lower_fence", fences.lower},
              {"upper_fence", fences.upper},
              {"rows_removed", t2.n_rows() - t3.n_rows()}};
  a["imputation"] = {{"method", "median"},
                     {"fit_on", spec.impute_on_full_table ? "full_table" : "train_partition"},
                     {"fit_rows", fit_rows.size()},
                     {"columns", medians}};
  std::size_t train_events = 0;
  for (auto i : split.train) train_events += events[i] ? 1 : 0;
  std::size_t test_events = 0;
  for (auto i : split.test) test_events += events[i] ? 1 : 0;
  a["split"] = {{"ratio", spec.split_ratio},
                {"seed", spec.seed},
                {"stratified_by", spec.event_column},
                {"rows_in", t3.n_rows()},
                {"train", split.train.size()},
                {"test", split.test.size()},
                {"train_events", train_events},
                {"test_events", test_events}};
  const std::size_t total_events = train_events + test_events;
  a["censoring"] = {{"n", t4.n_rows()},
                    {"events", total_events},
                    {"censored", t4.n_rows() - total_events},
                    {"censored_fraction",
                     t4.n_rows() ? static_cast<double>(t4.n_rows() - total_events) /
                                       static_cast<double>(t4.n_rows())
                                 : 0.0}};
  a["features"] = features;
  a["warnings"] = warnings;
  return result;
}

// ---------------------------------------------------------------------------
// Canonical dataset file

void write_dataset(std::ostream& out, const Dataset& d) {
  out << "sample_id\ttime\tevent";
  for (const auto& f : d.feature_names()) out << '\t' << f;
  out << '\n';
  for (std::size_t i = 0; i < d.n(); ++i) {
    const auto& s = d[i];
    out << (d.has_ids() ? d.sample_ids()[i] : std::to_string(i)) << '\t' << format_number(s.time)
        << '\t' << (s.event ? 1 : 0);
    for (double v : s.covariates) out << '\t' << format_number(v);
    out << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  LoadOptions options;
  options.key_column = "sample_id";
  options.missing_sentinels = {""};
  RawTable t = parse_tsv(in, options);
  if (t.n_cols() < 3 || t.column_names[0] != "sample_id" || t.column_names[1] != "time" ||
      t.column_names[2] != "event") {
    throw DataError("dataset file must start with columns sample_id, time, event");
  }
  std::vector<std::string> features(t.column_names.begin() + 3, t.column_names.end());
  return table_to_dataset(t, "time", "event", features);
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  try {
    return read_dataset(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace survkit
