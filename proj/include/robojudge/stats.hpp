#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "robojudge/util.hpp"

namespace robojudge {

// Average ranks (1-based) of the combined sample, ties share their mean rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

enum class MwuMethod { exact, normal_approx_tie_corrected };

inline std::string_view to_string(MwuMethod m) {
  return m == MwuMethod::exact ? "exact" : "normal_approx_tie_corrected";
}

struct UTestResult {
  double u_statistic = 0.0;  // U for the first sample
  double p_value = 1.0;      // two-sided
  MwuMethod method = MwuMethod::exact;

  friend bool operator==(const UTestResult&, const UTestResult&) = default;
};

namespace detail {

// Null distribution counts of the U statistic: number of rank assignments of
// n items among n+m yielding each U in 0..n*m.
// counts(u; i, j) = counts(u - j; i - 1, j) + counts(u; i, j - 1)
inline std::vector<double> mwu_null_counts(int n, int m) {
  const int max_u = n * m;
  std::vector<std::vector<double>> dp(static_cast<std::size_t>(m) + 1,
                                      std::vector<double>(static_cast<std::size_t>(max_u) + 1, 0.0));
  for (int j = 0; j <= m; ++j) dp[static_cast<std::size_t>(j)][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    std::vector<std::vector<double>> next(static_cast<std::size_t>(m) + 1,
                                          std::vector<double>(static_cast<std::size_t>(max_u) + 1, 0.0));
    next[0][0] = 1.0;
    for (int j = 1; j <= m; ++j) {
      for (int u = 0; u <= i * j; ++u) {
        double c = next[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(u)];
        if (u >= j) c += dp[static_cast<std::size_t>(j)][static_cast<std::size_t>(u - j)];
        next[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)] = c;
      }
    }
    dp = std::move(next);
  }
  return dp[static_cast<std::size_t>(m)];
}

}  // namespace detail

// Two-sided Mann-Whitney U. Exact null enumeration when the combined sample
// has at most 20 observations and no ties; otherwise the normal approximation
// with tie and continuity corrections. U is reported for `x`.
inline UTestResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ValidationError("mann_whitney_u: empty sample");
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(y.size());
  std::vector<double> combined(x.begin(), x.end());
  combined.insert(combined.end(), y.begin(), y.end());
  std::vector<double> ranks = average_ranks(combined);
  double rank_sum_x = std::accumulate(ranks.begin(), ranks.begin() + n, 0.0);
  double u_x = rank_sum_x - static_cast<double>(n) * (n + 1) / 2.0;

  std::map<double, int> tie_groups;
  for (double v : combined) tie_groups[v] += 1;
  bool has_ties = std::any_of(tie_groups.begin(), tie_groups.end(),
                              [](const auto& kv) { return kv.second > 1; });

  UTestResult result;
  result.u_statistic = u_x;
  const double nm = static_cast<double>(n) * m;
  if (!has_ties && n + m <= 20) {
    result.method = MwuMethod::exact;
    std::vector<double> counts = detail::mwu_null_counts(n, m);
    double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    auto u_int = static_cast<std::size_t>(std::llround(u_x));
    double below = 0.0;
    for (std::size_t u = 0; u <= u_int; ++u) below += counts[u];
    double above = 0.0;
    for (std::size_t u = u_int; u < counts.size(); ++u) above += counts[u];
    result.p_value = std::min(1.0, 2.0 * std::min(below, above) / total);
  } else {
    result.method = MwuMethod::normal_approx_tie_corrected;
    const double big_n = static_cast<double>(n + m);
    double tie_term = 0.0;
    for (const auto& [value, t] : tie_groups) {
      tie_term += static_cast<double>(t) * t * t - t;
    }
    double variance =
        nm / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if (variance <= 0.0) {
      result.p_value = 1.0;
    } else {
      double z = std::max(0.0, std::abs(u_x - nm / 2.0) - 0.5) / std::sqrt(variance);
      boost::math::normal_distribution<double> normal;
      result.p_value = 2.0 * boost::math::cdf(normal, -z);
    }
  }
  return result;
}

enum class EffectMagnitude { negligible, small, medium, large };

inline std::string_view to_string(EffectMagnitude m) {
  switch (m) {
    case EffectMagnitude::negligible: return "negligible";
    case EffectMagnitude::small: return "small";
    case EffectMagnitude::medium: return "medium";
    case EffectMagnitude::large: return "large";
  }
  throw ValidationError("invalid magnitude");
}

// Fixed interpretation bands; boundary membership follows the brackets:
// negligible (0.44, 0.56), small (0.34, 0.44] u [0.56, 0.64),
// medium (0.29, 0.34] u [0.64, 0.71), large [0, 0.29] u [0.71, 1].
inline EffectMagnitude a12_magnitude(double a12) {
  if (a12 > 0.44 && a12 < 0.56) return EffectMagnitude::negligible;
  if ((a12 > 0.34 && a12 <= 0.44) || (a12 >= 0.56 && a12 < 0.64)) {
    return EffectMagnitude::small;
  }
  if ((a12 > 0.29 && a12 <= 0.34) || (a12 >= 0.64 && a12 < 0.71)) {
    return EffectMagnitude::medium;
  }
  return EffectMagnitude::large;
}

struct A12Result {
  double a12 = 0.5;  // probability of superiority of x over y, ties count half
  EffectMagnitude magnitude = EffectMagnitude::negligible;

  friend bool operator==(const A12Result&, const A12Result&) = default;
};

inline A12Result vargha_delaney_a12(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ValidationError("vargha_delaney_a12: empty sample");
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::vector<double> combined(x.begin(), x.end());
  combined.insert(combined.end(), y.begin(), y.end());
  std::vector<double> ranks = average_ranks(combined);
  double rank_sum_x = std::accumulate(ranks.begin(), ranks.begin() + x.size(), 0.0);
  A12Result result;
  result.a12 = (rank_sum_x / n - (n + 1.0) / 2.0) / m;
  result.magnitude = a12_magnitude(result.a12);
  return result;
}

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;

  friend bool operator==(const CorrelationResult&, const CorrelationResult&) = default;
};

// Spearman rank correlation on average ranks, p-value from the t-distribution
// approximation with n-2 degrees of freedom.
inline CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("spearman: need at least 3 paired observations");
  std::vector<double> rx = average_ranks(x);
  std::vector<double> ry = average_ranks(y);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw StatError("spearman: correlation undefined for a constant input vector");
  }
  CorrelationResult result;
  result.rho = sxy / std::sqrt(sxx * syy);
  result.rho = std::clamp(result.rho, -1.0, 1.0);
  double denom = 1.0 - result.rho * result.rho;
  if (denom <= 0.0) {
    result.p_value = 0.0;
  } else {
    double t = result.rho * std::sqrt((static_cast<double>(n) - 2.0) / denom);
    boost::math::students_t_distribution<double> dist(static_cast<double>(n) - 2.0);
    result.p_value = 2.0 * boost::math::cdf(dist, -std::abs(t));
  }
  return result;
}

}  // namespace robojudge
