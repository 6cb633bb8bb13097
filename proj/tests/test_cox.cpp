#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "survkit/cox.hpp"
#include "survkit/error.hpp"
#include "survkit/rsf.hpp"

using namespace survkit;

namespace {

Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t p, bool ties) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> day(1, 6);
  std::exponential_distribution<double> ex(1.0);
  std::bernoulli_distribution censored(0.3);
  std::vector<SurvivalSample> s;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(p);
    for (auto& v : x) v = z(rng);
    s.push_back({ties ? static_cast<double>(day(rng)) : ex(rng), !censored(rng), x});
  }
  s[0].event = true;
  return Dataset(names, std::move(s));
}

std::vector<double> random_beta(std::mt19937_64& rng, std::size_t p) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> b(p);
  for (auto& v : b) v = u(rng);
  return b;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

CoxModel manual_model(std::vector<double> beta, std::vector<double> cov) {
  CoxModel m;
  for (std::size_t j = 0; j < beta.size(); ++j) m.feature_names.push_back("x" + std::to_string(j));
  m.beta = std::move(beta);
  m.covariance = std::move(cov);
  return m;
}

}  // namespace

TEST(PartialLikelihood, NullValueIsMinusSumLogRiskSetSizes) {
  const Dataset d({"x"}, {{1, true, {0.3}}, {2, false, {1.0}}, {3, true, {-2}}, {4, true, {5}}, {5, false, {1}}});
  const std::vector<double> zero = {0.0};
  // Event times 1, 3, 4 have risk sets of size 5, 3, 2.
  EXPECT_NEAR(log_partial_likelihood(zero, d), -(std::log(5.0) + std::log(3.0) + std::log(2.0)), 1e-12);
}

TEST(PartialLikelihood, TwoSampleHandValue) {
  const Dataset d({"x"}, {{1, true, {1}}, {2, true, {0}}});
  const std::vector<double> beta = {std::log(2.0)};
  EXPECT_NEAR(log_partial_likelihood(beta, d, TieMethod::kBreslow), std::log(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(log_partial_likelihood(beta, d, TieMethod::kEfron), std::log(2.0 / 3.0), 1e-12);
}

TEST(PartialLikelihood, EfronEqualsBreslowWithoutTies) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset d = random_dataset(rng, 25, 3, false);
    const auto beta = random_beta(rng, 3);
    EXPECT_EQ(log_partial_likelihood(beta, d, TieMethod::kEfron),
              log_partial_likelihood(beta, d, TieMethod::kBreslow));
  }
}

TEST(PartialLikelihood, MatchesDirectDefinition) {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 50; ++rep) {
    const Dataset d = random_dataset(rng, 30, 2, true);
    const auto beta = random_beta(rng, 2);
    for (bool efron : {true, false}) {
      const double expected = oracle::cox_loglik(beta, d, efron);
      const double got = log_partial_likelihood(beta, d, efron ? TieMethod::kEfron : TieMethod::kBreslow);
      EXPECT_NEAR(got, expected, 1e-10 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(PartialLikelihood, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 40; ++rep) {
    const Dataset d = random_dataset(rng, 30, 3, rep % 2 == 0);
    const auto beta = random_beta(rng, 3);
    for (TieMethod tm : {TieMethod::kEfron, TieMethod::kBreslow}) {
      const auto pl = partial_likelihood_derivatives(beta, d, tm);
      std::vector<double> fd(3), diff(3);
      const double h = 1e-5;
      for (std::size_t j = 0; j < 3; ++j) {
        auto up = beta, down = beta;
        up[j] += h;
        down[j] -= h;
        fd[j] = (log_partial_likelihood(up, d, tm) - log_partial_likelihood(down, d, tm)) / (2 * h);
        diff[j] = fd[j] - pl.gradient[j];
      }
      EXPECT_LT(max_abs(diff) / max_abs(pl.gradient), 1e-5);
    }
  }
}

TEST(PartialLikelihood, InformationMatchesDifferencedGradient) {
  std::mt19937_64 rng(24);
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset d = random_dataset(rng, 30, 2, true);
    const auto beta = random_beta(rng, 2);
    for (TieMethod tm : {TieMethod::kEfron, TieMethod::kBreslow}) {
      const auto pl = partial_likelihood_derivatives(beta, d, tm);
      const double h = 1e-5;
      for (std::size_t k = 0; k < 2; ++k) {
        auto up = beta, down = beta;
        up[k] += h;
        down[k] -= h;
        const auto gu = partial_likelihood_derivatives(up, d, tm).gradient;
        const auto gd = partial_likelihood_derivatives(down, d, tm).gradient;
        for (std::size_t j = 0; j < 2; ++j) {
          const double fd = -(gu[j] - gd[j]) / (2 * h);
          EXPECT_NEAR(pl.information[j * 2 + k], fd, 1e-5 * std::max(1.0, std::abs(fd)));
        }
      }
    }
  }
}

TEST(CoxFit, SimulatedHazardRatioTwo) {
  const Dataset d = oracle::exponential_cohort(2000, 2.0, 2024);
  const CoxModel m = cox_fit(d);
  const auto rows = cox_summary(m);
  EXPECT_LT(std::abs(m.beta[0] - std::log(2.0)), 3.0 * rows[0].se);
}

TEST(CoxFit, HandDatasetMatchesGridSearch) {
  const Dataset d({"x"}, {{1, true, {2.0}}, {2, true, {0.5}}, {3, false, {1.5}}, {4, true, {-1.0}},
                          {5, true, {1.0}}, {6, false, {-0.5}}});
  for (TieMethod tm : {TieMethod::kEfron, TieMethod::kBreslow}) {
    CoxFitOptions opts;
    opts.tie_method = tm;
    const CoxModel m = cox_fit(d, opts);
    double best = -5.0, best_ll = -INFINITY;
    for (int k = 0; k <= 10000; ++k) {
      const double b = -5.0 + k * 1e-3;
      const double ll = oracle::cox_loglik({b}, d, tm == TieMethod::kEfron);
      if (ll > best_ll) {
        best_ll = ll;
        best = b;
      }
    }
    EXPECT_NEAR(m.beta[0], best, 2e-3);
  }
}

TEST(CoxFit, LikelihoodAtOptimumNotBelowNull) {
  std::mt19937_64 rng(25);
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset d = random_dataset(rng, 60, 2, true);
    const CoxModel m = cox_fit(d);
    EXPECT_GE(m.log_likelihood, m.null_log_likelihood);
    EXPECT_NEAR(m.log_likelihood, log_partial_likelihood(m.beta, d), 1e-9 * std::abs(m.log_likelihood));
  }
}

TEST(CoxFit, LocationInvariance) {
  std::mt19937_64 rng(26);
  const Dataset d = random_dataset(rng, 80, 3, true);
  const CoxModel base = cox_fit(d);
  std::vector<SurvivalSample> shifted = d.samples();
  for (auto& s : shifted) s.covariates[1] += 1234.5;
  const CoxModel m = cox_fit(Dataset(d.feature_names(), shifted));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(m.beta[j], base.beta[j], 1e-8);
  EXPECT_NEAR(m.log_likelihood, base.log_likelihood, 1e-8);
}

TEST(CoxFit, ScaleEquivariance) {
  std::mt19937_64 rng(27);
  const Dataset d = random_dataset(rng, 80, 3, true);
  const CoxModel base = cox_fit(d);
  const double c = 365.25;
  std::vector<SurvivalSample> scaled = d.samples();
  for (auto& s : scaled) s.covariates[2] *= c;
  const Dataset ds(d.feature_names(), scaled);
  const CoxModel m = cox_fit(ds);
  EXPECT_NEAR(m.beta[2] * c, base.beta[2], 1e-8);
  EXPECT_NEAR(m.beta[0], base.beta[0], 1e-8);
  EXPECT_NEAR(m.log_likelihood, base.log_likelihood, 1e-8);
  for (std::size_t i = 1; i < d.n(); ++i) {
    const bool a = cox_predict_risk(base, d[i].covariates) < cox_predict_risk(base, d[i - 1].covariates);
    const bool b = cox_predict_risk(m, ds[i].covariates) < cox_predict_risk(m, ds[i - 1].covariates);
    EXPECT_EQ(a, b);
  }
}

TEST(CoxFit, ConstantColumnIsNamed) {
  const Dataset d({"age", "flat"}, {{1, true, {1, 3}}, {2, true, {2, 3}}, {3, false, {4, 3}}});
  try {
    cox_fit(d);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
  }
}

TEST(CoxFit, CollinearColumnsAreNamed) {
  std::mt19937_64 rng(28);
  const Dataset base = random_dataset(rng, 40, 1, true);
  std::vector<SurvivalSample> s = base.samples();
  for (auto& x : s) x.covariates = {x.covariates[0], 2.0 * x.covariates[0] + 1.0};
  try {
    cox_fit(Dataset({"a", "b"}, s));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("a"), std::string::npos);
    EXPECT_NE(msg.find("b"), std::string::npos);
  }
}

TEST(CoxFit, NoEventsIsAnError) {
  const Dataset d({"x"}, {{1, false, {1}}, {2, false, {2}}});
  EXPECT_THROW(cox_fit(d), DataError);
}

TEST(CoxFit, WarnsWhenFeaturesOutnumberEvents) {
  const Dataset d({"a", "b"}, {{1, true, {1, 0}}, {2, false, {0, 1}}, {3, true, {3, 2}}, {4, false, {2, 5}}});
  try {
    const CoxModel m = cox_fit(d);
    EXPECT_FALSE(m.warnings.empty());
  } catch (const NumericError&) {
    SUCCEED();  // tiny data may also fail to converge; either way it is reported
  }
}

TEST(CoxSummary, ArithmeticFromDefinitions) {
  const auto rows = cox_summary(manual_model({-0.23}, {0.08 * 0.08}));
  EXPECT_NEAR(rows[0].z, -2.875, 1e-12);
  EXPECT_NEAR(rows[0].hazard_ratio, std::exp(-0.23), 1e-15);
  EXPECT_NEAR(rows[0].hazard_ratio, 0.794, 1e-3);  // quoted value is truncated, not rounded
  EXPECT_NEAR(rows[0].ci_low_hr, 0.68, 5e-3);
  EXPECT_NEAR(rows[0].ci_high_hr, 0.93, 5e-3);
}

TEST(CoxSummary, ZeroCoefficient) {
  const auto rows = cox_summary(manual_model({0.0}, {0.25}));
  EXPECT_EQ(rows[0].hazard_ratio, 1.0);
  EXPECT_EQ(rows[0].z, 0.0);
  EXPECT_EQ(rows[0].p_value, 1.0);
}

TEST(CoxSummary, ResidualTumorR2Row) {
  const auto rows = cox_summary(manual_model({0.46}, {0.45 * 0.45}));
  EXPECT_NEAR(rows[0].hazard_ratio, 1.58, 5e-3);
  EXPECT_NEAR(rows[0].p_value, 0.31, 5e-3);
}

TEST(BreslowBaseline, ZeroBetaIsNelsonAalen) {
  std::mt19937_64 rng(29);
  const Dataset d = random_dataset(rng, 40, 2, true);
  const auto h = breslow_baseline(std::vector<double>{0.0, 0.0}, d);
  const auto na = nelson_aalen(d.times(), d.events());
  ASSERT_EQ(h.times, na.times);
  for (std::size_t k = 0; k < h.size(); ++k) EXPECT_NEAR(h.hazard[k], na.hazard[k], 1e-12);
}

TEST(BreslowBaseline, SingleSubject) {
  const Dataset d({"x"}, {{1, true, {0.7}}});
  const auto h = breslow_baseline(std::vector<double>{0.4}, d);
  EXPECT_NEAR(h.hazard[0], std::exp(-0.28), 1e-12);
}

TEST(BreslowBaseline, DoublingRelativeRiskHalvesIncrements) {
  std::mt19937_64 rng(30);
  const Dataset d = random_dataset(rng, 30, 1, true);
  std::vector<SurvivalSample> s = d.samples();
  for (auto& x : s) x.covariates[0] += std::log(2.0);
  const auto a = breslow_baseline(std::vector<double>{1.0}, d);
  const auto b = breslow_baseline(std::vector<double>{1.0}, Dataset(d.feature_names(), s));
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(b.hazard[k], 0.5 * a.hazard[k], 1e-12);
}

TEST(CoxPredict, RiskIsLinearPredictor) {
  const CoxModel m = manual_model({1.0, -2.0}, {1, 0, 0, 1});
  EXPECT_EQ(cox_predict_risk(m, std::vector<double>{0, 0}), 0.0);
  EXPECT_EQ(cox_predict_risk(m, std::vector<double>{3, 1}), 1.0);
  EXPECT_THROW(cox_predict_risk(m, std::vector<double>{1}), DataError);
}

TEST(CoxPredict, SurvivalFromBaseline) {
  CoxModel m = manual_model({std::log(2.0)}, {1});
  m.baseline = {{5.0}, {0.1}};
  const auto ref = cox_predict_survival(m, std::vector<double>{0.0});
  EXPECT_EQ(ref.survival, chf_to_survival(m.baseline).survival);
  const auto s = cox_predict_survival(m, std::vector<double>{1.0});
  EXPECT_NEAR(s.survival[0], 0.8187, 1e-4);
  EXPECT_LT(s.survival[0], ref.survival[0]);
}
