#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "robojudge/util.hpp"

namespace robojudge {

// Normalized probabilities over a fixed, ordered label set. All uncertainty
// metrics are computed from this.
class ClassDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  ClassDistribution(std::vector<std::string> labels, std::vector<double> probabilities)
      : labels_(std::move(labels)), probabilities_(std::move(probabilities)) {
    if (labels_.size() < 2) throw ValidationError("distribution needs at least 2 labels");
    if (labels_.size() != probabilities_.size()) {
      throw ValidationError("label/probability count mismatch");
    }
    std::unordered_set<std::string> seen(labels_.begin(), labels_.end());
    if (seen.size() != labels_.size()) throw ValidationError("duplicate labels");
    double sum = 0.0;
    for (double p : probabilities_) {
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probability outside [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw ValidationError("probabilities must sum to 1 within 1e-9");
    }
  }

  static ClassDistribution point_mass(std::vector<std::string> labels, std::size_t index) {
    std::vector<double> p(labels.size(), 0.0);
    if (index >= p.size()) throw ValidationError("point mass index out of range");
    p[index] = 1.0;
    return ClassDistribution(std::move(labels), std::move(p));
  }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& probabilities() const { return probabilities_; }
  std::size_t size() const { return labels_.size(); }

  std::size_t argmax() const {
    return static_cast<std::size_t>(
        std::max_element(probabilities_.begin(), probabilities_.end()) -
        probabilities_.begin());
  }

  const std::string& argmax_label() const { return labels_[argmax()]; }

  friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<double> probabilities_;
};

}  // namespace robojudge
