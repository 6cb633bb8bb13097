#pragma once

#include <span>
#include <string>
#include <vector>

#include "survkit/types.hpp"

namespace survkit {

enum class TieMethod { kEfron, kBreslow };

struct CoxFitOptions {
  TieMethod tie_method = TieMethod::kEfron;
  // Convergence threshold on the absolute change of the log partial likelihood.
  double tolerance = 1e-9;
  int max_iterations = 100;
  int step_halving_max = 10;
  // Threshold on the gradient infinity norm, computed on standardized
  // covariates and divided by the number of events.
  double gradient_tolerance = 1e-6;
};

struct CoxModel {
  std::vector<std::string> feature_names;
  std::vector<double> beta;
  // Row-major p x p inverse observed information at beta.
  std::vector<double> covariance;
  double log_likelihood = 0.0;
  double null_log_likelihood = 0.0;
  int iterations = 0;
  TieMethod tie_method = TieMethod::kEfron;
  CumulativeHazard baseline;
  std::vector<std::string> warnings;

  std::size_t p() const noexcept { return beta.size(); }
  double cov(std::size_t i, std::size_t j) const { return covariance[i * beta.size() + j]; }
};

struct CoxSummaryRow {
  std::string feature;
  double coef = 0.0;
  double hazard_ratio = 1.0;
  double se = 0.0;
  double ci_low_coef = 0.0;
  double ci_high_coef = 0.0;
  double ci_low_hr = 1.0;
  double ci_high_hr = 1.0;
  double z = 0.0;
  double p_value = 1.0;
};

/// Log partial likelihood value, score vector and observed information.
struct PartialLikelihood {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<double> information;  // row-major p x p, negative Hessian
};

/// Log partial likelihood at `beta`, Efron or Breslow tie handling.
double log_partial_likelihood(std::span<const double> beta, const Dataset& d,
                              TieMethod tie_method = TieMethod::kEfron);

/// Value, analytic gradient and observed information in one pass.
PartialLikelihood partial_likelihood_derivatives(std::span<const double> beta, const Dataset& d,
                                                 TieMethod tie_method = TieMethod::kEfron);

/// Newton-Raphson maximization with step halving. Covariates are used in raw
/// units; the returned coefficients are per raw unit.
CoxModel cox_fit(const Dataset& d, const CoxFitOptions& options = {});

/// Table-style inference rows in feature order. Two-sided Wald p-values.
std::vector<CoxSummaryRow> cox_summary(const CoxModel& m, double confidence = 0.95);

/// H0(t) = sum over event times <= t of d_i / sum_{risk set} exp(beta'x).
CumulativeHazard breslow_baseline(std::span<const double> beta, const Dataset& d);

/// Linear predictor beta'x.
double cox_predict_risk(const CoxModel& m, std::span<const double> x);

/// S(t | x) = exp(-H0(t) exp(beta'x)).
SurvivalCurve cox_predict_survival(const CoxModel& m, std::span<const double> x);

}  // namespace survkit
