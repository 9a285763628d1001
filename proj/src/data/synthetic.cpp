#include "hebert/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hebert/common/error.hpp"

namespace hebert::data {

namespace {
constexpr const char* kModule = "dataset-io";

std::vector<double> normal_vec(std::mt19937_64& rng, std::size_t n, double sd) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}
}  // namespace

EmbeddingDataset gaussian_blobs(std::size_t rows, std::uint32_t dim, std::uint32_t classes, std::uint64_t seed,
                                double centre_sd, double noise_sd) {
  require(classes >= 2 && dim > 0, kModule, ErrorCode::InvalidArgument, "blobs need dim > 0 and >= 2 classes");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> centres;
  for (std::uint32_t c = 0; c < classes; ++c) centres.push_back(normal_vec(rng, dim, centre_sd));
  EmbeddingDataset ds;
  ds.dim = dim;
  ds.class_count = classes;
  ds.values.reserve(rows * dim);
  std::normal_distribution<double> noise(0.0, noise_sd);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto c = static_cast<std::uint16_t>(i % classes);
    for (std::uint32_t j = 0; j < dim; ++j)
      ds.values.push_back(static_cast<float>(std::clamp(centres[c][j] + noise(rng), -1.0, 1.0)));
    ds.labels.push_back(c);
  }
  return ds;
}

EmbeddingDataset separable_binary(std::size_t rows, std::uint32_t dim, std::uint64_t seed, double margin,
                                  double centre_sd, double noise_sd) {
  std::mt19937_64 rng(seed);
  const auto c0 = normal_vec(rng, dim, centre_sd);
  const auto c1 = normal_vec(rng, dim, centre_sd);
  std::vector<double> dir(dim), mid(dim);
  double norm = 0;
  for (std::uint32_t j = 0; j < dim; ++j) {
    dir[j] = c1[j] - c0[j];
    mid[j] = (c1[j] + c0[j]) / 2;
    norm += dir[j] * dir[j];
  }
  norm = std::sqrt(norm);
  for (auto& x : dir) x /= norm;

  EmbeddingDataset ds;
  ds.dim = dim;
  ds.class_count = 2;
  std::normal_distribution<double> noise(0.0, noise_sd);
  std::vector<float> row(dim);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto label = static_cast<std::uint16_t>(i % 2);
    const auto& c = label ? c1 : c0;
    for (int tries = 0;; ++tries) {
      require(tries < 1000, kModule, ErrorCode::InvalidArgument, "margin too large for the blob geometry");
      double side = 0;
      for (std::uint32_t j = 0; j < dim; ++j) {
        row[j] = static_cast<float>(std::clamp(c[j] + noise(rng), -1.0, 1.0));
        side += (row[j] - mid[j]) * dir[j];
      }
      if ((label ? side : -side) >= margin) break;
    }
    ds.values.insert(ds.values.end(), row.begin(), row.end());
    ds.labels.push_back(label);
  }
  return ds;
}

SyntheticCorpus synthetic_corpus(std::size_t sentences, std::size_t vocab, std::size_t words_per_sentence,
                                 std::uint32_t dim, std::uint64_t seed, double word_sd) {
  require(words_per_sentence <= vocab, kModule, ErrorCode::InvalidArgument, "sentence longer than the vocabulary");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> wordvec;
  for (std::size_t w = 0; w < vocab; ++w) wordvec.push_back(normal_vec(rng, dim, word_sd));
  std::vector<double> weights(vocab);
  for (std::size_t w = 0; w < vocab; ++w) weights[w] = 1.0 / std::sqrt(static_cast<double>(w + 1));
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

  SyntheticCorpus out;
  out.embeddings.dim = dim;
  out.embeddings.class_count = 1;
  for (std::size_t s = 0; s < sentences; ++s) {
    std::set<std::size_t> words;
    while (words.size() < words_per_sentence) words.insert(pick(rng));
    std::string text;
    std::vector<double> emb(dim, 0.0);
    for (auto w : words) {
      if (!text.empty()) text += ' ';
      text += "w" + std::to_string(w);
      for (std::uint32_t j = 0; j < dim; ++j) emb[j] += wordvec[w][j];
    }
    for (auto x : emb)
      out.embeddings.values.push_back(
          static_cast<float>(std::clamp(x / static_cast<double>(words_per_sentence), -1.0, 1.0)));
    out.embeddings.labels.push_back(0);
    out.sentences.push_back(std::move(text));
  }
  return out;
}

}  // namespace hebert::data
