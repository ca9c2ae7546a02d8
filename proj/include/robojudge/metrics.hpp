#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "robojudge/distribution.hpp"
#include "robojudge/domain.hpp"

namespace robojudge {

// Ordinal-aware misclassification severity: a correctness penalty (0 or 2)
// plus the absolute gap on the 4-level quality scale. Range {0..5}.
struct DistanceBreakdown {
  int correctness_penalty = 0;  // 0 or 2
  int quality_gap = 0;          // |ordinal(predicted) - ordinal(truth)|, 0..3
  int total = 0;                // sum, 0..5

  friend bool operator==(const DistanceBreakdown&, const DistanceBreakdown&) = default;
};

inline DistanceBreakdown distance(const GroundTruth& truth, const Prediction& predicted) {
  DistanceBreakdown d;
  d.correctness_penalty = predicted.correctness == truth.correctness ? 0 : 2;
  d.quality_gap = std::abs(quality_to_ordinal(predicted.quality) -
                           quality_to_ordinal(truth.quality));
  d.total = d.correctness_penalty + d.quality_gap;
  return d;
}

struct UncertaintyReadout {
  double msp = 0.0;       // max probability; in [1/K, 1]
  double deepgini = 0.0;  // 1 - sum p_i^2; in [0, 1 - 1/K]
  double entropy = 0.0;   // -sum p_i ln p_i, natural log; in [0, ln K]
  double margin = 0.0;    // p(1) - p(2) of the two largest probabilities

  friend bool operator==(const UncertaintyReadout&, const UncertaintyReadout&) = default;
};

inline UncertaintyReadout uncertainty(const ClassDistribution& dist) {
  UncertaintyReadout u;
  double sum_sq = 0.0;
  double largest = 0.0;
  double second = 0.0;
  for (double p : dist.probabilities()) {
    sum_sq += p * p;
    if (p > largest) {
      second = largest;
      largest = p;
    } else if (p > second) {
      second = p;
    }
    if (p > 0.0) u.entropy -= p * std::log(p);
  }
  u.msp = largest;
  u.deepgini = 1.0 - sum_sq;
  u.margin = largest - second;
  return u;
}

struct BinaryPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // 0/0 cases reported as 0 and flagged rather than NaN.
  bool degenerate = false;
};

// Positive class defaults to Successful.
inline BinaryPrf binary_prf(
    std::span<const std::pair<CorrectnessLabel, CorrectnessLabel>> truth_predicted,
    CorrectnessLabel positive = CorrectnessLabel::successful) {
  if (truth_predicted.empty()) throw ValidationError("binary_prf: empty record list");
  long tp = 0, fp = 0, fn = 0;
  for (const auto& [truth, predicted] : truth_predicted) {
    if (predicted == positive) {
      (truth == positive ? tp : fp) += 1;
    } else if (truth == positive) {
      fn += 1;
    }
  }
  BinaryPrf out;
  if (tp + fp == 0) {
    out.degenerate = true;
  } else {
    out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    out.degenerate = true;
  } else {
    out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  } else {
    out.degenerate = true;
  }
  return out;
}

struct MulticlassPrf {
  double precision_micro = 0.0;
  double precision_macro = 0.0;
  double recall_micro = 0.0;
  double recall_macro = 0.0;
  double f1_micro = 0.0;
  double f1_macro = 0.0;
  bool degenerate = false;
};

// Quality classification over {Low, Medium, High}. Micro aggregates over all
// samples; macro averages per-class values, skipping classes absent from both
// truth and prediction.
inline MulticlassPrf multiclass_prf(
    std::span<const std::pair<QualityLevel, QualityLevel>> truth_predicted) {
  if (truth_predicted.empty()) throw ValidationError("multiclass_prf: empty record list");
  constexpr int kClasses = 3;  // Low=0, Medium=1, High=2
  long confusion[kClasses][kClasses] = {};
  for (const auto& [truth, predicted] : truth_predicted) {
    if (truth == QualityLevel::failure || predicted == QualityLevel::failure) {
      throw ValidationError("multiclass_prf: labels must be Low/Medium/High");
    }
    confusion[quality_to_ordinal(truth) - 1][quality_to_ordinal(predicted) - 1] += 1;
  }
  long tp_sum = 0, fp_sum = 0, fn_sum = 0;
  double p_macro = 0.0, r_macro = 0.0, f_macro = 0.0;
  int present = 0;
  MulticlassPrf out;
  for (int c = 0; c < kClasses; ++c) {
    long tp = confusion[c][c];
    long fn = 0, fp = 0;
    for (int o = 0; o < kClasses; ++o) {
      if (o != c) {
        fn += confusion[c][o];
        fp += confusion[o][c];
      }
    }
    tp_sum += tp;
    fp_sum += fp;
    fn_sum += fn;
    if (tp + fp + fn == 0) continue;  // class absent everywhere
    ++present;
    double p = 0.0, r = 0.0;
    if (tp + fp > 0) {
      p = static_cast<double>(tp) / static_cast<double>(tp + fp);
    } else {
      out.degenerate = true;
    }
    if (tp + fn > 0) {
      r = static_cast<double>(tp) / static_cast<double>(tp + fn);
    } else {
      out.degenerate = true;
    }
    double f = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    p_macro += p;
    r_macro += r;
    f_macro += f;
  }
  out.precision_micro = static_cast<double>(tp_sum) / static_cast<double>(tp_sum + fp_sum);
  out.recall_micro = static_cast<double>(tp_sum) / static_cast<double>(tp_sum + fn_sum);
  out.f1_micro = (out.precision_micro + out.recall_micro) > 0.0
                     ? 2.0 * out.precision_micro * out.recall_micro /
                           (out.precision_micro + out.recall_micro)
                     : 0.0;
  out.precision_macro = p_macro / present;
  out.recall_macro = r_macro / present;
  out.f1_macro = f_macro / present;
  return out;
}

struct MetricSummary {
  std::string metric_name;
  double mean = 0.0;
  double stddev = 0.0;  // sample (n-1); 0 for a single run
  std::vector<double> per_run;

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

inline MetricSummary summarize_runs(std::string metric_name, std::vector<double> values) {
  if (values.empty()) throw ValidationError("summarize_runs: no values");
  MetricSummary s;
  s.metric_name = std::move(metric_name);
  // deterministic repetitions must report exactly their value and sigma 0;
  // the accumulate/divide round trip would smear identical inputs otherwise
  const bool all_equal =
      std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
  if (all_equal) {
    s.mean = values.front();
  } else {
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  s.per_run = std::move(values);
  return s;
}

}  // namespace robojudge
