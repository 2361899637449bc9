#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace triage {

struct AnovaResult {
  double f = 0.0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ms_between = 0.0;
  double ms_within = 0.0;
  double p_value = 1.0;
};

/// Needs at least two groups of at least two values and nonzero within-group
/// variance.
AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

/// Upper tail P(F > f) of the F distribution, through the regularized
/// incomplete beta function.
double f_survival(double f, double df1, double df2);

/// CDF of the studentized range of k standard normal means with `df` error
/// degrees of freedom. Absolute error below 1e-6.
double ptukey(double q, int k, double df);

/// Inverse of ptukey in q, by bisection to 1e-7.
double qtukey(double p, int k, double df);

struct TukeyPair {
  std::string first;
  std::string second;
  double difference = 0.0;  // mean(first) - mean(second)
  double se = 0.0;
  double critical_mean = 0.0;
  double q = 0.0;
  double p_value = 1.0;
  bool significant = false;  // |difference| > critical_mean
};

struct TukeyReport {
  std::vector<TukeyPair> pairs;
  double alpha = 0.05;
  int k = 0;
  double df = 0.0;
  double q_critical = 0.0;
  /// True when group sizes differ and the Tukey-Kramer standard error is used.
  bool unequal_sizes = false;
  std::vector<std::string> groups;
  std::vector<double> means;
};

/// All k(k-1)/2 pairs in input order. SE = sqrt(MS_within / n) for equal sizes
/// (sqrt(MS_within / 2 * (1/n_i + 1/n_j)) otherwise), df = N - k.
TukeyReport tukey_hsd(std::span<const std::vector<double>> groups, std::span<const std::string> names,
                      double alpha = 0.05);

struct SummaryPair {
  std::string first;
  std::string second;
  double difference = 0.0;
};

/// Tukey arithmetic from published summary statistics.
TukeyReport tukey_from_summary(std::span<const SummaryPair> pairs, double se, int k, double df,
                               double alpha = 0.05);

/// "Pair | Difference | SE | Critical mean | p-value" table.
std::string to_text(const TukeyReport& report);
std::string to_text(const AnovaResult& result);
nlohmann::json to_json(const TukeyReport& report);
nlohmann::json to_json(const AnovaResult& result);

}  // namespace triage
