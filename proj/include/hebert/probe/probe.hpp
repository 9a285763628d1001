#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hebert/data/dataset.hpp"

namespace hebert::probe {

/// Lowercased whitespace tokens, deduplicated, in first-seen order.
std::vector<std::string> tokenize(const std::string& sentence);

/// Words appearing in at least `min_freq` sentences, sorted.
std::vector<std::string> build_vocab(const std::vector<std::string>& sentences, std::size_t min_freq = 2);

/// Per sentence: indices into vocab (out-of-vocabulary words dropped).
using TokenSets = std::vector<std::vector<std::uint32_t>>;
TokenSets token_sets(const std::vector<std::string>& sentences, const std::vector<std::string>& vocab);

/// Multi-label linear classifier: score_w(x) = sigmoid(W_w . x + b_w).
struct ProbeModel {
  std::vector<std::string> vocab;
  std::uint32_t dim = 0;
  std::vector<double> weights;  // vocab.size() * dim, row per word
  std::vector<double> bias;
  double threshold = 0.5;

  std::vector<double> scores(std::span<const float> x) const;
};

struct ProbeConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.5;
  std::size_t batch_size = 32;
  double l2 = 1e-4;
  double threshold = 0.5;
  std::uint64_t seed = 0;
};

/// SGD on the summed binary cross-entropy. Deterministic for a fixed seed.
ProbeModel train_probe(const data::EmbeddingDataset& embeddings, const TokenSets& targets,
                       const std::vector<std::string>& vocab, const ProbeConfig& config);

struct AttackCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
  double f1() const;
};

/// Micro-averaged F1 of predicted vs true token sets.
double attack_f1(const ProbeModel& model, const data::EmbeddingDataset& embeddings, const TokenSets& targets,
                 double threshold);
AttackCounts attack_counts(const std::vector<std::vector<std::uint32_t>>& predicted, const TokenSets& truth);

}  // namespace hebert::probe
