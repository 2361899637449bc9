#include "triage/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <nlohmann/json.hpp>

#include "triage/error.hpp"

namespace triage {
namespace {

// 16-point Gauss-Legendre nodes and weights on [-1, 1] (positive half).
constexpr std::array<double, 8> kNodes{
    0.0950125098376374401853193, 0.2816035507792589132304605, 0.4580167776572273863424194,
    0.6178762444026437484466718, 0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
constexpr std::array<double, 8> kWeights{
    0.1894506104550684962853967, 0.1826034150449235888667637, 0.1691565193950025381893121,
    0.1495959888165767320815017, 0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

template <typename F>
double gauss_legendre(F&& f, double lo, double hi, std::size_t panels) {
  const double width = (hi - lo) / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = lo + (static_cast<double>(p) + 0.5) * width;
    const double half = 0.5 * width;
    for (std::size_t i = 0; i < kNodes.size(); ++i) {
      sum += kWeights[i] * half * (f(mid - half * kNodes[i]) + f(mid + half * kNodes[i]));
    }
  }
  return sum;
}

// Nodes for the inner integral over the normal location z, with phi(z) and
// Phi(z) cached; they do not depend on the range w.
struct InnerGrid {
  std::vector<double> z, weight_phi, cdf;

  InnerGrid() {
    constexpr double lo = -8.5, hi = 8.5;
    constexpr std::size_t panels = 34;
    const double half = 0.5 * (hi - lo) / panels;
    for (std::size_t p = 0; p < panels; ++p) {
      const double mid = lo + (2.0 * static_cast<double>(p) + 1.0) * half;
      for (std::size_t i = 0; i < kNodes.size(); ++i) {
        for (double sign : {-1.0, 1.0}) {
          const double x = mid + sign * half * kNodes[i];
          z.push_back(x);
          weight_phi.push_back(kWeights[i] * half * kInvSqrt2Pi * std::exp(-0.5 * x * x));
          cdf.push_back(normal_cdf(x));
        }
      }
    }
  }
};

const InnerGrid& inner_grid() {
  static const InnerGrid grid;
  return grid;
}

// P(range of k iid standard normals <= w).
double range_cdf(double w, int k) {
  if (w <= 0.0) return 0.0;
  const auto& g = inner_grid();
  double sum = 0.0;
  for (std::size_t i = 0; i < g.z.size(); ++i) {
    const double inner = g.cdf[i] - normal_cdf(g.z[i] - w);
    if (inner > 0.0) sum += g.weight_phi[i] * std::pow(inner, k - 1);
  }
  return std::clamp(k * sum, 0.0, 1.0);
}

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

TukeyPair make_pair(std::string first, std::string second, double difference, double se, double q_crit,
                    int k, double df) {
  if (!(se > 0.0)) throw ValidationError("standard error must be positive");
  TukeyPair p;
  p.first = std::move(first);
  p.second = std::move(second);
  p.difference = difference;
  p.se = se;
  p.critical_mean = q_crit * se;
  p.q = std::abs(difference) / se;
  p.p_value = p.q == 0.0 ? 1.0 : std::clamp(1.0 - ptukey(p.q, k, df), 0.0, 1.0);
  p.significant = std::abs(difference) > p.critical_mean;
  return p;
}

}  // namespace

double f_survival(double f, double df1, double df2) {
  if (!(df1 > 0.0 && df2 > 0.0)) throw ValidationError("F distribution needs positive degrees of freedom");
  if (f <= 0.0) return 1.0;
  return boost::math::ibeta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

AnovaResult one_way_anova(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw ValidationError("ANOVA needs at least two groups");
  double grand = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw ValidationError("every ANOVA group needs at least two values");
    grand += std::accumulate(g.begin(), g.end(), 0.0);
    n += g.size();
  }
  grand /= static_cast<double>(n);
  AnovaResult r;
  for (const auto& g : groups) {
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    r.ss_between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) r.ss_within += (v - mean) * (v - mean);
  }
  r.df_between = groups.size() - 1;
  r.df_within = n - groups.size();
  r.ms_between = r.ss_between / static_cast<double>(r.df_between);
  r.ms_within = r.ss_within / static_cast<double>(r.df_within);
  if (!(r.ms_within > 0.0)) throw ValidationError("zero within-group variance; F is undefined");
  r.f = r.ms_between / r.ms_within;
  r.p_value = f_survival(r.f, static_cast<double>(r.df_between), static_cast<double>(r.df_within));
  return r;
}

double ptukey(double q, int k, double df) {
  if (k < 2) throw ValidationError("ptukey needs k >= 2");
  if (!(df >= 1.0)) throw ValidationError("ptukey needs df >= 1");
  if (!(q > 0.0)) return 0.0;
  if (df > 25000.0) return range_cdf(q, k);

  // s = sqrt(chi2_df / df) has density c * s^(df-1) * exp(-df s^2 / 2).
  const boost::math::chi_squared chi(df);
  const double s_lo = std::sqrt(boost::math::quantile(chi, 1e-12) / df);
  const double s_hi = std::sqrt(boost::math::quantile(boost::math::complement(chi, 1e-12)) / df);
  const double log_c = 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
  const auto integrand = [&](double s) {
    const double log_density = log_c + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
    return std::exp(log_density) * range_cdf(q * s, k);
  };
  return std::clamp(gauss_legendre(integrand, s_lo, s_hi, 16), 0.0, 1.0);
}

double qtukey(double p, int k, double df) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("qtukey needs p in (0, 1)");
  double lo = 0.0;
  double hi = 8.0;
  while (ptukey(hi, k, df) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw ValidationError("qtukey failed to bracket the quantile");
  }
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    (ptukey(mid, k, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TukeyReport tukey_hsd(std::span<const std::vector<double>> groups, std::span<const std::string> names,
                      double alpha) {
  if (groups.size() != names.size()) throw ValidationError("one name per group is required");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  for (const auto& g : groups) {
    if (g.size() < 2) throw ValidationError("every Tukey group needs at least two values");
  }
  const AnovaResult anova = one_way_anova(groups);
  TukeyReport r;
  r.alpha = alpha;
  r.k = static_cast<int>(groups.size());
  r.df = static_cast<double>(anova.df_within);
  r.q_critical = qtukey(1.0 - alpha, r.k, r.df);
  r.groups.assign(names.begin(), names.end());
  for (const auto& g : groups) {
    r.means.push_back(std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size()));
    r.unequal_sizes = r.unequal_sizes || g.size() != groups.front().size();
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const double ni = static_cast<double>(groups[i].size());
      const double nj = static_cast<double>(groups[j].size());
      const double se = r.unequal_sizes ? std::sqrt(anova.ms_within / 2.0 * (1.0 / ni + 1.0 / nj))
                                        : std::sqrt(anova.ms_within / ni);
      r.pairs.push_back(make_pair(names[i], names[j], r.means[i] - r.means[j], se, r.q_critical, r.k, r.df));
    }
  }
  return r;
}

TukeyReport tukey_from_summary(std::span<const SummaryPair> pairs, double se, int k, double df, double alpha) {
  if (!(se > 0.0)) throw ValidationError("standard error must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  TukeyReport r;
  r.alpha = alpha;
  r.k = k;
  r.df = df;
  r.q_critical = qtukey(1.0 - alpha, k, df);
  for (const auto& p : pairs) r.pairs.push_back(make_pair(p.first, p.second, p.difference, se, r.q_critical, k, df));
  return r;
}

std::string to_text(const TukeyReport& report) {
  std::ostringstream out;
  out << "Pair | Difference | SE | Critical mean | p-value\n";
  for (const auto& p : report.pairs) {
    out << p.first << " - " << p.second << " | " << format("%.2f", p.difference) << " | " << format("%.4f", p.se)
        << " | " << format("%.4f", p.critical_mean) << " | " << format("%.4g", p.p_value) << '\n';
  }
  out << "\nalpha = " << format("%g", report.alpha) << ", k = " << report.k << ", df = " << format("%g", report.df)
      << ", q_crit = " << format("%.4f", report.q_critical)
      << (report.unequal_sizes ? ", Tukey-Kramer standard errors" : "") << '\n';
  std::string significant;
  for (const auto& p : report.pairs) {
    if (p.significant) significant += (significant.empty() ? "" : ", ") + p.first + " - " + p.second;
  }
  out << "significant: " << (significant.empty() ? "none" : significant) << '\n';
  return out.str();
}

std::string to_text(const AnovaResult& r) {
  std::ostringstream out;
  out << "One-way ANOVA: F(" << r.df_between << ", " << r.df_within << ") = " << format("%.4f", r.f)
      << ", p = " << format("%.4g", r.p_value) << ", MS_within = " << format("%.6g", r.ms_within) << '\n';
  return out.str();
}

nlohmann::json to_json(const TukeyReport& report) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"pair", p.first + " - " + p.second},
                     {"first", p.first},
                     {"second", p.second},
                     {"difference", p.difference},
                     {"se", p.se},
                     {"critical_mean", p.critical_mean},
                     {"q", p.q},
                     {"p_value", p.p_value},
                     {"significant", p.significant}});
  }
  nlohmann::json j = {{"alpha", report.alpha},
                      {"k", report.k},
                      {"df", report.df},
                      {"q_critical", report.q_critical},
                      {"unequal_sizes", report.unequal_sizes},
                      {"pairs", std::move(pairs)}};
  if (!report.groups.empty()) {
    nlohmann::json means = nlohmann::json::object();
    for (std::size_t i = 0; i < report.groups.size(); ++i) means[report.groups[i]] = report.means[i];
    j["group_means"] = std::move(means);
  }
  return j;
}

nlohmann::json to_json(const AnovaResult& r) {
  return {{"f", r.f},
          {"df_between", r.df_between},
          {"df_within", r.df_within},
          {"ss_between", r.ss_between},
          {"ss_within", r.ss_within},
          {"ms_between", r.ms_between},
          {"ms_within", r.ms_within},
          {"p_value", r.p_value}};
}

}  // namespace triage
