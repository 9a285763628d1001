#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hebert::data {

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double f1() const;
};

struct MetricReport {
  double threshold = 0.5;
  double f1 = 0;        // positive class (binary) or macro (multiclass)
  double macro_f1 = 0;
  double auc = 0;       // per-class one-vs-rest, averaged
  double accuracy = 0;
};

/// Mann-Whitney AUC; a tied pair counts one half.
double auc(std::span<const double> scores, std::span<const std::uint8_t> positive);
/// O(P*N) pair counting, for tests.
double auc_pairs(std::span<const double> scores, std::span<const std::uint8_t> positive);

Confusion confusion_at(std::span<const double> scores, std::span<const std::uint8_t> positive, double threshold);

/// Binary: `scores` holds one probability per row and prediction is
/// score >= threshold. Multiclass: rows * class_count scores, argmax.
MetricReport compute_metrics(std::span<const double> scores, std::span<const std::uint16_t> labels, double threshold,
                             std::uint32_t class_count);

}  // namespace hebert::data
