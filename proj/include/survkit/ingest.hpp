#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "survkit/types.hpp"

namespace survkit {

/// Missing cells are std::nullopt; everything else is kept as text and
/// parsed on demand.
using Cell = std::optional<std::string>;

struct RawTable {
  std::vector<std::string> column_names;
  std::vector<std::vector<Cell>> rows;
  std::string key_column;

  std::size_t n_rows() const noexcept { return rows.size(); }
  std::size_t n_cols() const noexcept { return column_names.size(); }
  bool has_column(const std::string& name) const;
  /// Throws DataError for unknown columns.
  std::size_t column_index(const std::string& name) const;
  const Cell& at(std::size_t row, const std::string& column) const;
};

enum class TableFormat { kAuto, kTsv, kJsonRecords };

inline const std::vector<std::string> kDefaultMissingSentinels = {"", "NA", "[Not Available]"};

struct LoadOptions {
  TableFormat format = TableFormat::kAuto;
  std::string key_column = "sample";
  std::vector<std::string> missing_sentinels = kDefaultMissingSentinels;
};

/// Reads a tab-separated file with a header row, or a JSON array of records.
/// kAuto picks JSON when the first non-blank character is '['.
RawTable load_table(const std::filesystem::path& path, const LoadOptions& options = {});
RawTable parse_tsv(std::istream& in, const LoadOptions& options = {});
RawTable parse_json_records(const std::string& text, const LoadOptions& options = {});

/// Inner join on the key column. Columns are the union, the key appears once,
/// and for columns present in both inputs the left value wins unless missing.
RawTable merge_on_key(const RawTable& a, const RawTable& b);

/// Rows whose time is not a finite number >= 0, or whose event is not 0/1,
/// are removed. Labels that are present but unparseable are reported in
/// `warnings` when given.
RawTable drop_missing_labels(const RawTable& t, const std::string& time_col,
                             const std::string& event_col,
                             std::vector<std::string>* warnings = nullptr);

/// Removes columns without any non-missing cell. The key column is kept.
RawTable drop_empty_columns(const RawTable& t);

struct ImputeModel {
  std::vector<std::pair<std::string, double>> medians;  // in column order
};

/// Median of each column over `fit_rows`; even counts average the two middle
/// order statistics.
ImputeModel fit_impute(const RawTable& t, const std::vector<std::string>& columns,
                       const std::vector<std::size_t>& fit_rows);
RawTable apply_impute(const RawTable& t, const ImputeModel& m);

struct LabelEncoding {
  std::string column;
  std::map<std::string, int> mapping;
  std::string output_column;  // empty: "<column>_encoded"
};

struct OneHotEncoding {
  std::string column;
  std::string reference;
  // Declared category levels; empty means the observed values. The
  // reference level never gets an indicator column.
  std::vector<std::string> categories;
};

struct PreprocessSpec {
  std::string time_column = "OS.time";
  std::string event_column = "OS";
  std::vector<std::string> numeric_features;
  std::vector<LabelEncoding> label_encode;
  std::vector<OneHotEncoding> one_hot;
  std::string outlier_column = "OS.time";
  double iqr_multiplier = 1.5;
  double split_ratio = 0.8;
  std::uint64_t seed = 42;
  // Fit imputation medians on every row instead of the training partition.
  bool impute_on_full_table = false;

  void validate() const;
  /// Names of the feature columns the pipeline produces from `raw` (the
  /// table before encoding), in output order.
  std::vector<std::string> output_features(const RawTable& raw) const;
};

/// Label encodings become integer columns, one-hot columns become k-1
/// indicator columns named "<column>_<category>". Missing stays missing.
RawTable encode_categoricals(const RawTable& t, const PreprocessSpec& spec);

/// Linear interpolation between order statistics (the "type 7" quantile).
double quantile_linear(std::vector<double> values, double q);

struct IqrFences {
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

IqrFences iqr_fences(const RawTable& t, const std::string& column, double multiplier);
RawTable remove_outliers_iqr(const RawTable& t, const std::string& column, double multiplier);

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Stratified by event flag. The training share of the total is round(ratio * n),
/// apportioned across strata by largest remainder; each stratum keeps at least
/// one member on each side. Deterministic for a fixed seed.
SplitIndices stratified_split_indices(const std::vector<bool>& events, double ratio,
                                      std::uint64_t seed);
std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double ratio, std::uint64_t seed);

/// Labels like "0-60", "61-100" for edges {0, 60, 100}. The first bin is
/// [e0, e1]; later bins are (e_k, e_{k+1}] and are named from e_k + 1.
std::vector<std::string> bin_age_groups(const std::vector<double>& ages,
                                        const std::vector<double>& edges);

/// Builds a Dataset from numeric, non-missing columns.
Dataset table_to_dataset(const RawTable& t, const std::string& time_col, const std::string& event_col,
                         const std::vector<std::string>& features);

struct PreprocessResult {
  Dataset dataset;
  SplitIndices split;
  nlohmann::ordered_json audit;
};

/// Full cleaning protocol on an already merged table. See README for the
/// stage order.
PreprocessResult preprocess(const RawTable& merged, const PreprocessSpec& spec);

/// Canonical dataset file: tab-separated, header
/// "sample_id time event <features...>", no missing cells.
void write_dataset(std::ostream& out, const Dataset& d);
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);
std::optional<double> parse_number(const std::string& text);

}  // namespace survkit
