// Independent reference implementations used as test oracles. They are
// written for clarity, not speed, and share no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "survkit/types.hpp"

namespace oracle {

struct PairCounts {
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t tied_risk = 0;
  std::int64_t usable = 0;
  double c_index() const { return usable == 0 ? 0.5 : (concordant + 0.5 * tied_risk) / usable; }
};

// Harrell pairs: (i, j) usable when T_i < T_j and subject i had the event.
inline PairCounts brute_concordance(const std::vector<double>& t, const std::vector<bool>& e,
                                    const std::vector<double>& r) {
  PairCounts out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!e[i]) continue;
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (!(t[i] < t[j])) continue;
      ++out.usable;
      if (r[i] > r[j]) ++out.concordant;
      else if (r[i] < r[j]) ++out.discordant;
      else ++out.tied_risk;
    }
  }
  return out;
}

// Product-limit estimate at each distinct event time, from raw tallies.
inline std::vector<std::pair<double, double>> product_limit(const std::vector<double>& t,
                                                            const std::vector<bool>& e) {
  std::set<double> event_times;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (e[i]) event_times.insert(t[i]);
  }
  std::vector<std::pair<double, double>> out;
  double s = 1.0;
  for (double u : event_times) {
    double n = 0, d = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] >= u) ++n;
      if (t[i] == u && e[i]) ++d;
    }
    s *= 1.0 - d / n;
    out.emplace_back(u, s);
  }
  return out;
}

// Fraction of observations strictly greater than u.
inline double empirical_survivor(const std::vector<double>& t, double u) {
  double above = 0;
  for (double v : t) above += v > u ? 1 : 0;
  return above / static_cast<double>(t.size());
}

// Weighted Nelson-Aalen: H(u) = sum over event times s <= u of d_w(s) / n_w(s).
inline std::vector<std::pair<double, double>> nelson_aalen(const std::vector<double>& t,
                                                           const std::vector<bool>& e,
                                                           const std::vector<double>& w) {
  std::set<double> event_times;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (e[i] && w[i] > 0) event_times.insert(t[i]);
  }
  std::vector<std::pair<double, double>> out;
  double h = 0.0;
  for (double u : event_times) {
    double n = 0, d = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] >= u) n += w[i];
      if (t[i] == u && e[i]) d += w[i];
    }
    h += d / n;
    out.emplace_back(u, h);
  }
  return out;
}

// Log partial likelihood straight from its definition: for each distinct
// event time, the tied deaths D, the risk set R, and either Breslow's
// |D| log sum_R or Efron's sum_l log(sum_R - l/|D| sum_D).
inline double cox_loglik(const std::vector<double>& beta, const survkit::Dataset& d, bool efron) {
  const std::size_t n = d.n();
  std::vector<double> eta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < beta.size(); ++k) eta[i] += beta[k] * d[i].covariates[k];
  }
  std::set<double> event_times;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i].event) event_times.insert(d[i].time);
  }
  double ll = 0.0;
  for (double u : event_times) {
    double risk_sum = 0.0, death_sum = 0.0, death_eta = 0.0;
    int deaths = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i].time >= u) risk_sum += std::exp(eta[i]);
      if (d[i].time == u && d[i].event) {
        death_sum += std::exp(eta[i]);
        death_eta += eta[i];
        ++deaths;
      }
    }
    ll += death_eta;
    for (int l = 0; l < deaths; ++l) {
      const double frac = efron ? static_cast<double>(l) / deaths : 0.0;
      ll -= std::log(risk_sum - frac * death_sum);
    }
  }
  return ll;
}

// Pairwise AUC: P(risk_pos > risk_neg) + 0.5 P(tie).
inline double pairwise_auc(const std::vector<bool>& positive, const std::vector<double>& r) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (positive[j]) continue;
      pairs += 1;
      wins += r[i] > r[j] ? 1.0 : (r[i] == r[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

// Two-group exponential cohort: hazard 1 for x = 0, hr for x = 1, optional
// uniform censoring on [0, censor_max] (0 disables censoring).
inline survkit::Dataset exponential_cohort(std::size_t n, double hr, std::uint64_t seed,
                                           double censor_max = 0.0) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> unit(1.0);
  std::uniform_real_distribution<double> cens(0.0, censor_max);
  std::vector<survkit::SurvivalSample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i % 2);
    const double death = unit(rng) / (x == 1.0 ? hr : 1.0);
    double t = death;
    bool event = true;
    if (censor_max > 0.0) {
      const double c = cens(rng);
      if (c < death) {
        t = c;
        event = false;
      }
    }
    samples.push_back({t, event, {x}});
  }
  return survkit::Dataset({"group"}, std::move(samples));
}

// Cohort whose log-hazard depends only on feature 0 (strongly); the other
// features are noise. Times are rounded to whole days to create ties.
inline survkit::Dataset strong_signal_cohort(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::exponential_distribution<double> unit(1.0);
  std::uniform_real_distribution<double> cens(0.0, 3000.0);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  std::vector<survkit::SurvivalSample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(p);
    for (auto& v : x) v = z(rng);
    const double death = std::round(1.0 + 500.0 * unit(rng) * std::exp(-3.0 * x[0]));
    const double c = std::round(1.0 + cens(rng));
    samples.push_back({std::min(death, c), death <= c, std::move(x)});
  }
  return survkit::Dataset(names, std::move(samples));
}

}  // namespace oracle
