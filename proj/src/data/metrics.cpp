#include "hebert/data/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hebert/common/error.hpp"

namespace hebert::data {

namespace {
constexpr const char* kModule = "dataset-io";
}

double Confusion::f1() const {
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

namespace {

void require_finite(std::span<const double> scores) {
  for (std::size_t i = 0; i < scores.size(); ++i)
    require(std::isfinite(scores[i]), kModule, ErrorCode::NonFinite, "score " + std::to_string(i) + " is not finite");
}

}  // namespace

double auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  require(scores.size() == positive.size(), kModule, ErrorCode::InvalidArgument, "score/label length mismatch");
  require_finite(scores);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // midranks over tie groups
  double pos_rank_sum = 0;
  std::size_t npos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) {
        pos_rank_sum += mid;
        ++npos;
      }
    i = j;
  }
  const std::size_t nneg = n - npos;
  require(npos > 0 && nneg > 0, kModule, ErrorCode::InvalidArgument, "AUC needs both classes present");
  const double u = pos_rank_sum - static_cast<double>(npos) * static_cast<double>(npos + 1) / 2.0;
  return u / (static_cast<double>(npos) * static_cast<double>(nneg));
}

double auc_pairs(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  double wins = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  require(pairs > 0, kModule, ErrorCode::InvalidArgument, "AUC needs both classes present");
  return wins / static_cast<double>(pairs);
}

Confusion confusion_at(std::span<const double> scores, std::span<const std::uint8_t> positive, double threshold) {
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && positive[i])
      ++c.tp;
    else if (pred)
      ++c.fp;
    else if (positive[i])
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

MetricReport compute_metrics(std::span<const double> scores, std::span<const std::uint16_t> labels, double threshold,
                             std::uint32_t class_count) {
  require(class_count >= 2, kModule, ErrorCode::InvalidArgument, "need at least two classes");
  require_finite(scores);
  const std::size_t rows = labels.size();
  MetricReport rep;
  rep.threshold = threshold;
  std::vector<std::uint8_t> pos(rows);
  if (class_count == 2) {
    require(scores.size() == rows, kModule, ErrorCode::InvalidArgument, "binary metrics want one score per row");
    for (std::size_t i = 0; i < rows; ++i) pos[i] = labels[i] == 1;
    const auto c = confusion_at(scores, pos, threshold);
    Confusion neg{c.tn, c.fn, c.fp, c.tp};
    rep.f1 = c.f1();
    rep.macro_f1 = (c.f1() + neg.f1()) / 2.0;
    rep.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(rows);
    rep.auc = auc(scores, pos);
    return rep;
  }
  require(scores.size() == rows * class_count, kModule, ErrorCode::InvalidArgument,
          "multiclass metrics want rows * class_count scores");
  std::vector<std::uint32_t> pred(rows);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    auto r = scores.subspan(i * class_count, class_count);
    pred[i] = static_cast<std::uint32_t>(std::max_element(r.begin(), r.end()) - r.begin());
    correct += pred[i] == labels[i];
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(rows);
  double f1sum = 0, aucsum = 0;
  std::vector<double> col(rows);
  for (std::uint32_t k = 0; k < class_count; ++k) {
    Confusion c;
    for (std::size_t i = 0; i < rows; ++i) {
      const bool p = pred[i] == k, t = labels[i] == k;
      c.tp += p && t;
      c.fp += p && !t;
      c.fn += !p && t;
      c.tn += !p && !t;
      pos[i] = t;
      col[i] = scores[i * class_count + k];
    }
    f1sum += c.f1();
    aucsum += auc(col, pos);
  }
  rep.macro_f1 = f1sum / class_count;
  rep.f1 = rep.macro_f1;
  rep.auc = aucsum / class_count;
  return rep;
}

}  // namespace hebert::data
