#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hebert/data/dataset.hpp"

namespace hebert::data {

/// Gaussian blobs: class centres with entries N(0, centre_sd^2), rows drawn
/// around them with entries N(0, noise_sd^2), clipped to [-1,1]. Labels
/// cycle so every class gets rows/classes (+1) rows.
EmbeddingDataset gaussian_blobs(std::size_t rows, std::uint32_t dim, std::uint32_t classes, std::uint64_t seed,
                                double centre_sd = 0.05, double noise_sd = 0.2);

/// Two blobs with every row on the correct side of the midpoint hyperplane
/// by at least `margin` (rows violating it are redrawn).
EmbeddingDataset separable_binary(std::size_t rows, std::uint32_t dim, std::uint64_t seed, double margin = 0.25,
                                  double centre_sd = 0.05, double noise_sd = 0.2);

/// Bag-of-words corpus: each sentence samples distinct words from a Zipf-ish
/// vocabulary; its embedding is the mean of fixed random word vectors.
struct SyntheticCorpus {
  std::vector<std::string> sentences;
  EmbeddingDataset embeddings;  // labels all zero
};
SyntheticCorpus synthetic_corpus(std::size_t sentences, std::size_t vocab, std::size_t words_per_sentence,
                                 std::uint32_t dim, std::uint64_t seed, double word_sd = 0.5);

}  // namespace hebert::data
