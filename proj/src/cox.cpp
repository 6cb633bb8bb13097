#include "survkit/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "survkit/error.hpp"
#include "survkit/km.hpp"

namespace survkit {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Covariates as an n x p matrix plus times/events, sorted by decreasing time.
struct SortedDesign {
  Matrix x;
  std::vector<double> time;
  std::vector<bool> event;
};

SortedDesign sorted_design(const Dataset& d, std::span<const double> center,
                           std::span<const double> scale) {
  const std::size_t n = d.n();
  const std::size_t p = d.p();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a].time > d[b].time; });
  SortedDesign out{Matrix(n, p), std::vector<double>(n), std::vector<bool>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    const auto& s = d[order[r]];
    out.time[r] = s.time;
    out.event[r] = s.event;
    for (std::size_t j = 0; j < p; ++j) {
      out.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          (s.covariates[j] - center[j]) / scale[j];
    }
  }
  return out;
}

std::vector<double> column_means(const Dataset& d) {
  std::vector<double> mean(d.p(), 0.0);
  for (const auto& s : d.samples()) {
    for (std::size_t j = 0; j < d.p(); ++j) mean[j] += s.covariates[j];
  }
  for (double& m : mean) m /= static_cast<double>(std::max<std::size_t>(d.n(), 1));
  return mean;
}

// Log partial likelihood with optional derivatives, on an already sorted design.
// Risk sets are accumulated from the largest time downwards.
PartialLikelihood evaluate(const SortedDesign& sd, const Vector& beta, TieMethod ties,
                           bool derivatives) {
  const auto n = sd.x.rows();
  const auto p = sd.x.cols();
  PartialLikelihood out;

  Vector eta = sd.x * beta;
  const double shift = n > 0 ? eta.maxCoeff() : 0.0;
  Vector w = (eta.array() - shift).exp();

  double s0 = 0.0;
  Vector s1 = Vector::Zero(p);
  Matrix s2 = Matrix::Zero(p, p);
  Vector grad = Vector::Zero(p);
  Matrix info = Matrix::Zero(p, p);
  double loglik = 0.0;

  for (Eigen::Index i = 0; i < n;) {
    const double t = sd.time[static_cast<std::size_t>(i)];
    double d0 = 0.0;
    Vector d1 = Vector::Zero(p);
    Matrix d2 = Matrix::Zero(p, p);
    double deaths = 0.0;
    Vector death_x = Vector::Zero(p);
    double death_eta = 0.0;

    for (; i < n && sd.time[static_cast<std::size_t>(i)] == t; ++i) {
      const auto row = sd.x.row(i).transpose();
      const double wi = w(i);
      s0 += wi;
      if (derivatives) {
        s1.noalias() += wi * row;
        s2.noalias() += wi * row * row.transpose();
      }
      if (sd.event[static_cast<std::size_t>(i)]) {
        deaths += 1.0;
        death_eta += eta(i);
        d0 += wi;
        if (derivatives) {
          death_x += row;
          d1.noalias() += wi * row;
          d2.noalias() += wi * row * row.transpose();
        }
      }
    }
    if (deaths == 0.0) continue;

    loglik += death_eta;
    if (derivatives) grad += death_x;
    const int m = static_cast<int>(deaths);
    for (int l = 0; l < m; ++l) {
      const double f = ties == TieMethod::kEfron ? static_cast<double>(l) / deaths : 0.0;
      const double denom = s0 - f * d0;
      loglik -= std::log(denom) + shift;
      if (derivatives) {
        const Vector mean = (s1 - f * d1) / denom;
        grad -= mean;
        info.noalias() += (s2 - f * d2) / denom - mean * mean.transpose();
      }
    }
  }

  out.value = loglik;
  if (derivatives) {
    out.gradient.assign(grad.data(), grad.data() + p);
    out.information.resize(static_cast<std::size_t>(p * p));
    for (Eigen::Index r = 0; r < p; ++r) {
      for (Eigen::Index c = 0; c < p; ++c) {
        out.information[static_cast<std::size_t>(r * p + c)] = info(r, c);
      }
    }
  }
  return out;
}

Vector to_vector(std::span<const double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

Matrix to_matrix(const std::vector<double>& flat, Eigen::Index p) {
  Matrix out(p, p);
  for (Eigen::Index r = 0; r < p; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) out(r, c) = flat[static_cast<std::size_t>(r * p + c)];
  }
  return out;
}

// Throws NumericError naming the features responsible for a (near) singular
// information matrix; does nothing when the matrix is well conditioned.
void check_information(const Matrix& info, const std::vector<std::string>& names) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(info);
  const Vector& values = eig.eigenvalues();
  const double largest = std::max(values.cwiseAbs().maxCoeff(), 1.0);
  if (values.minCoeff() > 1e-10 * largest) return;

  std::vector<std::string> culprits;
  for (Eigen::Index j = 0; j < info.rows(); ++j) {
    if (info(j, j) <= 1e-10 * largest) culprits.push_back(names[static_cast<std::size_t>(j)]);
  }
  if (culprits.empty()) {
    const Vector null_dir = eig.eigenvectors().col(0);
    for (Eigen::Index j = 0; j < null_dir.size(); ++j) {
      if (std::abs(null_dir(j)) > 0.1) culprits.push_back(names[static_cast<std::size_t>(j)]);
    }
  }
  std::ostringstream msg;
  msg << "singular information matrix; collinear or uninformative features:";
  for (const auto& c : culprits) msg << ' ' << c;
  throw NumericError(msg.str());
}

}  // namespace

PartialLikelihood partial_likelihood_derivatives(std::span<const double> beta, const Dataset& d,
                                                 TieMethod tie_method) {
  if (beta.size() != d.p()) throw DataError("beta length does not match feature count");
  const auto mean = column_means(d);
  const std::vector<double> unit(d.p(), 1.0);
  return evaluate(sorted_design(d, mean, unit), to_vector(beta), tie_method, true);
}

double log_partial_likelihood(std::span<const double> beta, const Dataset& d,
                              TieMethod tie_method) {
  if (beta.size() != d.p()) throw DataError("beta length does not match feature count");
  const auto mean = column_means(d);
  const std::vector<double> unit(d.p(), 1.0);
  return evaluate(sorted_design(d, mean, unit), to_vector(beta), tie_method, false).value;
}

CoxModel cox_fit(const Dataset& d, const CoxFitOptions& options) {
  if (!(options.tolerance > 0.0)) throw DataError("cox_fit: tolerance must be positive");
  if (options.max_iterations < 1) throw DataError("cox_fit: max_iterations must be >= 1");
  const std::size_t p = d.p();
  const std::size_t n_events = d.event_count();
  if (n_events == 0) throw DataError("cox_fit: no events in dataset");
  if (p == 0) throw DataError("cox_fit: no covariates");

  const auto mean = column_means(d);
  std::vector<double> scale(p, 0.0);
  for (const auto& s : d.samples()) {
    for (std::size_t j = 0; j < p; ++j) scale[j] += (s.covariates[j] - mean[j]) * (s.covariates[j] - mean[j]);
  }
  for (std::size_t j = 0; j < p; ++j) {
    scale[j] = std::sqrt(scale[j] / static_cast<double>(d.n()));
    if (!(scale[j] > 0.0)) {
      throw DataError("cox_fit: covariate '" + d.feature_names()[j] + "' is constant");
    }
  }

  CoxModel model;
  model.feature_names = d.feature_names();
  model.tie_method = options.tie_method;
  if (p >= n_events) {
    model.warnings.push_back("feature count " + std::to_string(p) + " is not below the event count " +
                             std::to_string(n_events));
  }

  const SortedDesign design = sorted_design(d, mean, scale);
  const auto P = static_cast<Eigen::Index>(p);
  Vector beta = Vector::Zero(P);
  PartialLikelihood current = evaluate(design, beta, options.tie_method, true);
  model.null_log_likelihood = current.value;

  auto grad_norm = [&](const PartialLikelihood& pl) {
    double norm = 0.0;
    for (double g : pl.gradient) norm = std::max(norm, std::abs(g));
    return norm / static_cast<double>(n_events);
  };
  auto unscale = [&](const Vector& b) {
    std::vector<double> raw(p);
    for (std::size_t j = 0; j < p; ++j) raw[j] = b(static_cast<Eigen::Index>(j)) / scale[j];
    return raw;
  };

  bool converged = grad_norm(current) < options.gradient_tolerance;
  int iteration = 0;
  while (!converged) {
    if (iteration >= options.max_iterations) {
      throw ConvergenceError("cox_fit: no convergence after " +
                                 std::to_string(options.max_iterations) + " iterations",
                             unscale(beta));
    }
    ++iteration;
    const Matrix info = to_matrix(current.information, P);
    check_information(info, model.feature_names);
    const Vector step = info.ldlt().solve(to_vector(current.gradient));

    double factor = 1.0;
    Vector candidate = beta + step;
    PartialLikelihood next = evaluate(design, candidate, options.tie_method, true);
    int halvings = 0;
    while (!(std::isfinite(next.value) && next.value >= current.value) &&
           halvings < options.step_halving_max) {
      factor *= 0.5;
      ++halvings;
      candidate = beta + factor * step;
      next = evaluate(design, candidate, options.tie_method, true);
    }
    if (!(std::isfinite(next.value) && next.value >= current.value)) {
      // No ascent direction left along the Newton step: accept the current
      // point if it is stationary, otherwise report failure.
      if (grad_norm(current) < options.gradient_tolerance * 1e3) break;
      throw ConvergenceError("cox_fit: step halving exhausted at iteration " +
                                 std::to_string(iteration),
                             unscale(beta));
    }
    const double change = std::abs(next.value - current.value);
    beta = candidate;
    current = std::move(next);
    converged = change < options.tolerance && grad_norm(current) < options.gradient_tolerance;
  }

  const Matrix info = to_matrix(current.information, P);
  check_information(info, model.feature_names);
  const Matrix cov_std = info.ldlt().solve(Matrix::Identity(P, P));

  model.beta = unscale(beta);
  model.covariance.resize(p * p);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      const double v = 0.5 * (cov_std(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +
                              cov_std(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)));
      model.covariance[r * p + c] = v / (scale[r] * scale[c]);
    }
  }
  model.log_likelihood = current.value;
  model.iterations = iteration;
  model.baseline = breslow_baseline(model.beta, d);
  return model;
}

std::vector<CoxSummaryRow> cox_summary(const CoxModel& m, double confidence) {
  const double zcrit = normal_critical_value(confidence);
  std::vector<CoxSummaryRow> rows;
  rows.reserve(m.p());
  for (std::size_t j = 0; j < m.p(); ++j) {
    CoxSummaryRow row;
    row.feature = m.feature_names[j];
    row.coef = m.beta[j];
    row.hazard_ratio = std::exp(row.coef);
    row.se = std::sqrt(std::max(m.cov(j, j), 0.0));
    row.ci_low_coef = row.coef - zcrit * row.se;
    row.ci_high_coef = row.coef + zcrit * row.se;
    row.ci_low_hr = std::exp(row.ci_low_coef);
    row.ci_high_hr = std::exp(row.ci_high_coef);
    row.z = row.se > 0.0 ? row.coef / row.se : 0.0;
    row.p_value = std::erfc(std::abs(row.z) / std::sqrt(2.0));
    rows.push_back(row);
  }
  return rows;
}

CumulativeHazard breslow_baseline(std::span<const double> beta, const Dataset& d) {
  if (beta.size() != d.p()) throw DataError("beta length does not match feature count");
  const std::size_t n = d.n();
  std::vector<double> eta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d.p(); ++j) eta[i] += beta[j] * d[i].covariates[j];
  }
  const double shift = n > 0 ? *std::max_element(eta.begin(), eta.end()) : 0.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a].time > d[b].time; });

  // Increments are computed from the largest time downwards, then accumulated
  // forwards in time.
  std::vector<std::pair<double, double>> increments;
  double risk = 0.0;
  for (std::size_t r = 0; r < n;) {
    const double t = d[order[r]].time;
    double deaths = 0.0;
    for (; r < n && d[order[r]].time == t; ++r) {
      risk += std::exp(eta[order[r]] - shift);
      if (d[order[r]].event) deaths += 1.0;
    }
    if (deaths > 0.0) increments.emplace_back(t, deaths * std::exp(-shift) / risk);
  }
  std::reverse(increments.begin(), increments.end());

  CumulativeHazard chf;
  double total = 0.0;
  for (const auto& [t, inc] : increments) {
    total += inc;
    chf.times.push_back(t);
    chf.hazard.push_back(total);
  }
  return chf;
}

double cox_predict_risk(const CoxModel& m, std::span<const double> x) {
  if (x.size() != m.p()) {
    throw DataError("covariate vector has " + std::to_string(x.size()) + " entries, model expects " +
                    std::to_string(m.p()));
  }
  double eta = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) eta += m.beta[j] * x[j];
  return eta;
}

SurvivalCurve cox_predict_survival(const CoxModel& m, std::span<const double> x) {
  const double rel = std::exp(cox_predict_risk(m, x));
  SurvivalCurve curve;
  curve.times = m.baseline.times;
  curve.survival.reserve(curve.times.size());
  for (double h : m.baseline.hazard) curve.survival.push_back(std::exp(-h * rel));
  return curve;
}

}  // namespace survkit
