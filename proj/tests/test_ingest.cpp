#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "survkit/error.hpp"
#include "survkit/ingest.hpp"

using namespace survkit;

namespace {

RawTable tsv(const std::string& text, const std::string& key = "sample") {
  std::istringstream in(text);
  LoadOptions opts;
  opts.key_column = key;
  return parse_tsv(in, opts);
}

RawTable column_table(const std::string& name, const std::vector<Cell>& values) {
  RawTable t;
  t.key_column = "sample";
  t.column_names = {"sample", name};
  for (std::size_t i = 0; i < values.size(); ++i) t.rows.push_back({"s" + std::to_string(i), values[i]});
  return t;
}

std::vector<Cell> numbers(std::initializer_list<double> v) {
  std::vector<Cell> out;
  for (double x : v) out.emplace_back(format_number(x));
  return out;
}

std::size_t count_events(const std::vector<bool>& e, const std::vector<std::size_t>& idx) {
  return static_cast<std::size_t>(std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return e[i]; }));
}

}  // namespace

TEST(LoadTable, ParsesHeaderAndRows) {
  const RawTable t = tsv("sample\tOS\tOS.time\ns1\t1\t100\ns2\t0\t250\n");
  EXPECT_EQ(t.n_rows(), 2u);
  EXPECT_EQ(t.n_cols(), 3u);
  EXPECT_EQ(*t.at(1, "OS.time"), "250");
}

TEST(LoadTable, EmptyCellIsMissingNotZero) {
  const RawTable t = tsv("sample\tOS\tOS.time\ns1\t1\t\ns2\tNA\t[Not Available]\n");
  EXPECT_FALSE(t.at(0, "OS.time").has_value());
  EXPECT_FALSE(t.at(1, "OS").has_value());
  EXPECT_FALSE(t.at(1, "OS.time").has_value());
}

TEST(LoadTable, ShortRowReportsLine) {
  try {
    tsv("a\tb\tc\td\te\tf\n1\t2\t3\t4\t5\t6\n1\t2\t3\t4\t5\n", "a");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(LoadTable, JsonRecords) {
  const RawTable t = parse_json_records(R"([{"sample":"s1","OS":1,"OS.time":12.5},{"sample":"s2","OS":null}])");
  EXPECT_EQ(t.n_rows(), 2u);
  EXPECT_EQ(*t.at(0, "OS.time"), "12.5");
  EXPECT_FALSE(t.at(1, "OS").has_value());
  EXPECT_FALSE(t.at(1, "OS.time").has_value());
  EXPECT_THROW(parse_json_records("{\"a\":1}"), DataError);
}

TEST(MergeOnKey, InnerJoin) {
  const RawTable a = tsv("sample\tx\ns1\t1\ns2\t2\n");
  const RawTable b = tsv("sample\ty\ns2\t5\ns3\t6\n");
  const RawTable m = merge_on_key(a, b);
  ASSERT_EQ(m.n_rows(), 1u);
  EXPECT_EQ(*m.at(0, "sample"), "s2");
  EXPECT_EQ(*m.at(0, "y"), "5");
}

TEST(MergeOnKey, ColumnUnionOnIdenticalKeys) {
  const RawTable a = tsv("sample\tx\ns1\t1\ns2\t2\ns3\t3\ns4\t4\n");
  const RawTable b = tsv("sample\ty\tx\ns4\t1\t\ns3\t2\t9\ns2\t3\t9\ns1\t4\t9\n");
  const RawTable m = merge_on_key(a, b);
  EXPECT_EQ(m.n_rows(), 4u);
  EXPECT_EQ(m.column_names, (std::vector<std::string>{"sample", "x", "y"}));
  EXPECT_EQ(*m.at(0, "x"), "1");
}

TEST(MergeOnKey, DuplicateKeyIsAnError) {
  const RawTable a = tsv("sample\tx\ns1\t1\ns1\t2\n");
  const RawTable b = tsv("sample\ty\ns1\t5\n");
  try {
    merge_on_key(a, b);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("s1"), std::string::npos);
  }
}

TEST(DropMissingLabels, RemovesMissingTimes) {
  const RawTable t = tsv("sample\tOS\tOS.time\ns1\t1\t5\ns2\t1\t\ns3\t0\t7\ns4\t1\tNA\ns5\t0\t9\n");
  EXPECT_EQ(drop_missing_labels(t, "OS.time", "OS").n_rows(), 3u);
}

TEST(DropMissingLabels, UnparseableEventDroppedWithWarning) {
  const RawTable t = tsv("sample\tOS\tOS.time\ns1\t1\t5\ns2\t2\t6\ns3\t0\t7\n");
  std::vector<std::string> warnings;
  const RawTable out = drop_missing_labels(t, "OS.time", "OS", &warnings);
  EXPECT_EQ(out.n_rows(), 2u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("s2"), std::string::npos);
}

TEST(DropMissingLabels, IdentityWhenComplete) {
  const RawTable t = tsv("sample\tOS\tOS.time\ns1\t1\t5\ns2\t0\t6\n");
  const RawTable out = drop_missing_labels(t, "OS.time", "OS");
  EXPECT_EQ(out.rows, t.rows);
  EXPECT_EQ(out.column_names, t.column_names);
}

TEST(DropEmptyColumns, RemovesAllMissingColumn) {
  const RawTable t = tsv("sample\ta\tb\ns1\t\t1\ns2\tNA\t2\n");
  EXPECT_EQ(drop_empty_columns(t).column_names, (std::vector<std::string>{"sample", "b"}));
}

TEST(DropEmptyColumns, IdentityWithoutEmptyColumns) {
  const RawTable t = tsv("sample\ta\ns1\t1\n");
  EXPECT_EQ(drop_empty_columns(t).column_names, t.column_names);
}

TEST(DropEmptyColumns, KeyColumnSurvives) {
  RawTable t = tsv("sample\ta\tb\ns1\t\t\ns2\t\t\n");
  t.rows[0][0].reset();
  t.rows[1][0].reset();
  EXPECT_EQ(drop_empty_columns(t).column_names, (std::vector<std::string>{"sample"}));
}

TEST(Impute, MedianOfObservedValues) {
  const RawTable t = column_table("x", {"1", "2", std::nullopt, "10"});
  const auto m = fit_impute(t, {"x"}, {0, 1, 2, 3});
  EXPECT_EQ(m.medians[0].second, 2.0);
}

TEST(Impute, EvenCountAveragesMiddlePair) {
  const RawTable t = column_table("x", numbers({1, 2, 3, 4}));
  EXPECT_EQ(fit_impute(t, {"x"}, {0, 1, 2, 3}).medians[0].second, 2.5);
}

TEST(Impute, AllMissingIsAnError) {
  const RawTable t = column_table("x", {std::nullopt, std::nullopt});
  EXPECT_THROW(fit_impute(t, {"x"}, {0, 1}), DataError);
}

TEST(Impute, FillsEveryMissingCellWithTheMedian) {
  const RawTable t = column_table("x", {"1", std::nullopt, "3", std::nullopt});
  ImputeModel m;
  m.medians = {{"x", 2.0}};
  const RawTable out = apply_impute(t, m);
  EXPECT_EQ(*out.at(1, "x"), "2");
  EXPECT_EQ(*out.at(3, "x"), "2");
  EXPECT_EQ(*out.at(0, "x"), "1");
}

TEST(Impute, IdentityWithoutMissingAndIdempotent) {
  const RawTable t = column_table("x", {"1", std::nullopt, "7"});
  const auto m = fit_impute(t, {"x"}, {0, 1, 2});
  const RawTable once = apply_impute(t, m);
  EXPECT_EQ(apply_impute(once, m).rows, once.rows);
  EXPECT_EQ(apply_impute(once, fit_impute(once, {"x"}, {0, 1, 2})).rows, once.rows);
}

TEST(Impute, FitRowsRestrictTheMedian) {
  const RawTable t = column_table("x", numbers({1, 2, 100, 200}));
  EXPECT_EQ(fit_impute(t, {"x"}, {0, 1}).medians[0].second, 1.5);
}

TEST(Encode, OneHotDropsReference) {
  RawTable t = tsv("sample\tresidual_tumor\ns1\tR0\ns2\tR1\ns3\tR2\ns4\tRX\n");
  PreprocessSpec spec;
  spec.one_hot = {{"residual_tumor", "R0", {}}};
  const RawTable out = encode_categoricals(t, spec);
  EXPECT_TRUE(out.has_column("residual_tumor_R1"));
  EXPECT_TRUE(out.has_column("residual_tumor_R2"));
  EXPECT_TRUE(out.has_column("residual_tumor_RX"));
  EXPECT_FALSE(out.has_column("residual_tumor_R0"));
  EXPECT_EQ(*out.at(2, "residual_tumor_R2"), "1");
  EXPECT_EQ(*out.at(2, "residual_tumor_R1"), "0");
}

TEST(Encode, LabelEncodingMapsGender) {
  RawTable t = tsv("sample\tgender\ns1\tMALE\ns2\tFEMALE\n");
  PreprocessSpec spec;
  spec.label_encode = {{"gender", {{"FEMALE", 0}, {"MALE", 1}}, ""}};
  const RawTable out = encode_categoricals(t, spec);
  EXPECT_EQ(*out.at(0, "gender_encoded"), "1");
  EXPECT_EQ(*out.at(1, "gender_encoded"), "0");
}

TEST(Encode, AllReferenceGivesZeroIndicators) {
  RawTable t = tsv("sample\tresidual_tumor\ns1\tR0\ns2\tR0\n");
  PreprocessSpec spec;
  spec.one_hot = {{"residual_tumor", "R0", {"R0", "R1", "R2", "RX"}}};
  const RawTable out = encode_categoricals(t, spec);
  for (const char* c : {"residual_tumor_R1", "residual_tumor_R2", "residual_tumor_RX"}) {
    EXPECT_EQ(*out.at(0, c), "0");
    EXPECT_EQ(*out.at(1, c), "0");
  }
}

TEST(Encode, UnmappedValueIsAnError) {
  RawTable t = tsv("sample\tgender\ns1\tOTHER\n");
  PreprocessSpec spec;
  spec.label_encode = {{"gender", {{"FEMALE", 0}, {"MALE", 1}}, ""}};
  EXPECT_THROW(encode_categoricals(t, spec), DataError);
}

TEST(Outliers, InterpolatedQuartiles) {
  const RawTable t = column_table("OS.time", numbers({1, 2, 3, 4, 5, 6, 7, 8, 9, 100}));
  const auto f = iqr_fences(t, "OS.time", 1.5);
  EXPECT_DOUBLE_EQ(f.q1, 3.25);
  EXPECT_DOUBLE_EQ(f.q3, 7.75);
  EXPECT_DOUBLE_EQ(f.iqr, 4.5);
  EXPECT_DOUBLE_EQ(f.upper, 14.5);
  const RawTable out = remove_outliers_iqr(t, "OS.time", 1.5);
  EXPECT_EQ(out.n_rows(), 9u);
  for (std::size_t r = 0; r < out.n_rows(); ++r) EXPECT_NE(*out.at(r, "OS.time"), "100");
}

TEST(Outliers, IdenticalValuesKeepEverything) {
  const RawTable t = column_table("OS.time", numbers({5, 5, 5, 5}));
  const auto f = iqr_fences(t, "OS.time", 1.5);
  EXPECT_EQ(f.lower, 5.0);
  EXPECT_EQ(f.upper, 5.0);
  EXPECT_EQ(remove_outliers_iqr(t, "OS.time", 1.5).n_rows(), 4u);
}

TEST(Outliers, IdentityInsideFences) {
  const RawTable t = column_table("OS.time", numbers({3, 4, 5, 6}));
  EXPECT_EQ(remove_outliers_iqr(t, "OS.time", 1.5).rows, t.rows);
}

TEST(Split, EightyTwentyWithEventStrata) {
  std::vector<bool> events(100, false);
  for (int i = 0; i < 36; ++i) events[static_cast<std::size_t>(i * 2 + 1)] = true;
  const auto s = stratified_split_indices(events, 0.8, 7);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.test.size(), 20u);
  EXPECT_EQ(count_events(events, s.train), 29u);
  EXPECT_EQ(count_events(events, s.test), 7u);
}

TEST(Split, HalfOfTen) {
  std::vector<bool> events = {true, false, true, false, true, false, true, false, true, false};
  const auto s = stratified_split_indices(events, 0.5, 3);
  EXPECT_EQ(s.train.size(), 5u);
  EXPECT_EQ(s.test.size(), 5u);
  const auto et = count_events(events, s.train);
  EXPECT_GE(et, 2u);
  EXPECT_LE(et, 3u);
}

TEST(Split, Reproducible) {
  std::vector<bool> events;
  for (int i = 0; i < 57; ++i) events.push_back(i % 3 == 0);
  const auto a = stratified_split_indices(events, 0.8, 42);
  const auto b = stratified_split_indices(events, 0.8, 42);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  const auto c = stratified_split_indices(events, 0.8, 43);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, PartitionIsDisjointAndComplete) {
  std::vector<bool> events;
  for (int i = 0; i < 41; ++i) events.push_back(i % 4 == 0);
  const auto s = stratified_split_indices(events, 0.7, 1);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(all.size(), events.size());
}

TEST(AgeBins, PaperTwoGroups) {
  const auto labels = bin_age_groups({60, 61, 0, 100}, {0, 60, 100});
  EXPECT_EQ(labels, (std::vector<std::string>{"0-60", "61-100", "0-60", "61-100"}));
}

TEST(AgeBins, FineBinsAndOutOfRange) {
  const auto labels = bin_age_groups({20, 21, 45, 80, 81}, {0, 20, 40, 60, 80, 100});
  EXPECT_EQ(labels, (std::vector<std::string>{"0-20", "21-40", "41-60", "61-80", "81-100"}));
  EXPECT_THROW(bin_age_groups({101}, {0, 60, 100}), DataError);
}

TEST(Numbers, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.0, -2.5}) EXPECT_EQ(*parse_number(format_number(v)), v);
  EXPECT_EQ(format_number(250.0), "250");
  EXPECT_FALSE(parse_number("abc").has_value());
  EXPECT_FALSE(parse_number("1.5x").has_value());
}

TEST(Preprocess, FullPipelineContract) {
  std::ostringstream text;
  text << "sample\tOS\tOS.time\tage\tgender\tresidual_tumor\tempty\n";
  for (int i = 0; i < 40; ++i) {
    text << "s" << i << '\t' << (i % 3 == 0 ? "0" : "1") << '\t' << (i == 7 ? "" : std::to_string(10 + i * 7))
         << '\t' << (i % 5 == 0 ? "NA" : std::to_string(40 + i)) << '\t' << (i % 2 ? "MALE" : "FEMALE") << '\t'
         << (i % 4 == 0 ? "R1" : "R0") << "\t\n";
  }
  text << "s99\t1\t99999\t50\tMALE\tR0\t\n";
  const RawTable raw = tsv(text.str());
  PreprocessSpec spec;
  spec.numeric_features = {"age"};
  spec.label_encode = {{"gender", {{"FEMALE", 0}, {"MALE", 1}}, "gender_encoded"}};
  spec.one_hot = {{"residual_tumor", "R0", {"R0", "R1"}}};
  const auto r = preprocess(raw, spec);

  EXPECT_EQ(r.dataset.feature_names(), (std::vector<std::string>{"age", "gender_encoded", "residual_tumor_R1"}));
  EXPECT_EQ(r.dataset.n(), r.split.train.size() + r.split.test.size());
  const auto fences = r.audit["iqr"];
  for (const auto& s : r.dataset.samples()) {
    EXPECT_GE(s.time, fences["lower_fence"].get<double>());
    EXPECT_LE(s.time, fences["upper_fence"].get<double>());
  }
  std::size_t prev = raw.n_rows();
  for (const auto& stage : r.audit["stages"]) {
    EXPECT_EQ(stage["rows_in"].get<std::size_t>(), prev);
    EXPECT_LE(stage["rows_out"].get<std::size_t>(), stage["rows_in"].get<std::size_t>());
    prev = stage["rows_out"].get<std::size_t>();
  }
  EXPECT_EQ(prev, r.dataset.n());
  EXPECT_EQ(r.audit["encodings"]["gender_encoded"]["mapping"]["MALE"], 1);
}

TEST(DatasetFile, RoundTrip) {
  const Dataset d({"a", "b"}, {{1.5, true, {0.1, 2}}, {3, false, {1.0 / 3.0, -4}}}, {"x1", "x2"});
  std::stringstream buf;
  write_dataset(buf, d);
  const Dataset back = read_dataset(buf);
  EXPECT_EQ(back.feature_names(), d.feature_names());
  EXPECT_EQ(back.sample_ids(), d.sample_ids());
  for (std::size_t i = 0; i < d.n(); ++i) {
    EXPECT_EQ(back[i].time, d[i].time);
    EXPECT_EQ(back[i].event, d[i].event);
    EXPECT_EQ(back[i].covariates, d[i].covariates);
  }
}
