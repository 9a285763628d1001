#include "hebert/probe/probe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "hebert/common/error.hpp"

namespace hebert::probe {

namespace {
constexpr const char* kModule = "inversion-probe";

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

std::vector<std::string> tokenize(const std::string& sentence) {
  std::istringstream in(sentence);
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

std::vector<std::string> build_vocab(const std::vector<std::string>& sentences, std::size_t min_freq) {
  std::map<std::string, std::size_t> df;
  for (const auto& s : sentences)
    for (auto& w : tokenize(s)) ++df[w];
  std::vector<std::string> vocab;
  for (auto& [w, c] : df)
    if (c >= min_freq) vocab.push_back(w);
  return vocab;
}

TokenSets token_sets(const std::vector<std::string>& sentences, const std::vector<std::string>& vocab) {
  std::map<std::string, std::uint32_t> index;
  for (std::uint32_t i = 0; i < vocab.size(); ++i) index[vocab[i]] = i;
  TokenSets out;
  for (const auto& s : sentences) {
    std::vector<std::uint32_t> ids;
    for (auto& w : tokenize(s))
      if (auto it = index.find(w); it != index.end()) ids.push_back(it->second);
    std::sort(ids.begin(), ids.end());
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<double> ProbeModel::scores(std::span<const float> x) const {
  require(x.size() == dim, kModule, ErrorCode::InvalidArgument, "embedding dimension does not match the probe");
  std::vector<double> s(vocab.size());
  for (std::size_t w = 0; w < vocab.size(); ++w) {
    double z = bias[w];
    const double* row = weights.data() + w * dim;
    for (std::uint32_t j = 0; j < dim; ++j) z += row[j] * x[j];
    s[w] = sigmoid(z);
  }
  return s;
}

ProbeModel train_probe(const data::EmbeddingDataset& emb, const TokenSets& targets,
                       const std::vector<std::string>& vocab, const ProbeConfig& cfg) {
  require(!vocab.empty(), kModule, ErrorCode::InvalidArgument, "empty vocabulary");
  require(targets.size() == emb.rows(), kModule, ErrorCode::InvalidArgument,
          "token sets and embeddings differ in row count");
  require(cfg.threshold > 0 && cfg.threshold < 1, kModule, ErrorCode::InvalidArgument, "threshold outside (0,1)");
  ProbeModel m;
  m.vocab = vocab;
  m.dim = emb.dim;
  m.threshold = cfg.threshold;
  const std::size_t V = vocab.size(), D = emb.dim, n = emb.rows();
  m.weights.assign(V * D, 0.0);
  m.bias.assign(V, 0.0);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> gw(V * D), gb(V), target(V);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      std::fill(gw.begin(), gw.end(), 0.0);
      std::fill(gb.begin(), gb.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto i = order[k];
        auto x = emb.row(i);
        std::fill(target.begin(), target.end(), 0.0);
        for (auto w : targets[i]) target[w] = 1.0;
        const auto s = m.scores(x);
        for (std::size_t w = 0; w < V; ++w) {
          const double d = s[w] - target[w];
          gb[w] += d;
          double* g = gw.data() + w * D;
          for (std::size_t j = 0; j < D; ++j) g[j] += d * x[j];
        }
      }
      const double step = cfg.learning_rate / static_cast<double>(end - start);
      for (std::size_t t = 0; t < V * D; ++t) m.weights[t] -= step * gw[t] + cfg.learning_rate * cfg.l2 * m.weights[t];
      for (std::size_t w = 0; w < V; ++w) m.bias[w] -= step * gb[w];
    }
  }
  return m;
}

double AttackCounts::f1() const {
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

AttackCounts attack_counts(const std::vector<std::vector<std::uint32_t>>& predicted, const TokenSets& truth) {
  require(predicted.size() == truth.size(), kModule, ErrorCode::InvalidArgument, "prediction/truth size mismatch");
  AttackCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    std::set<std::uint32_t> t(truth[i].begin(), truth[i].end());
    std::set<std::uint32_t> p(predicted[i].begin(), predicted[i].end());
    for (auto w : p) (t.count(w) ? c.tp : c.fp)++;
    for (auto w : t)
      if (!p.count(w)) ++c.fn;
  }
  return c;
}

double attack_f1(const ProbeModel& model, const data::EmbeddingDataset& emb, const TokenSets& targets,
                 double threshold) {
  require(targets.size() == emb.rows(), kModule, ErrorCode::InvalidArgument, "token sets and embeddings differ");
  std::vector<std::vector<std::uint32_t>> pred(emb.rows());
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    const auto s = model.scores(emb.row(i));
    for (std::uint32_t w = 0; w < s.size(); ++w)
      if (s[w] >= threshold) pred[i].push_back(w);
  }
  return attack_counts(pred, targets).f1();
}

}  // namespace hebert::probe
