#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hebert::data {

/// Row-major f32 embeddings with one integer label per row.
struct EmbeddingDataset {
  std::uint32_t dim = 0;
  std::vector<float> values;  // rows * dim
  std::vector<std::uint16_t> labels;
  std::uint32_t class_count = 0;
  std::string split_name;

  std::size_t rows() const { return labels.size(); }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<float> row(std::size_t i) { return {values.data() + i * dim, dim}; }

  /// Throws Format/NonFinite on broken invariants.
  void validate() const;
  EmbeddingDataset subset(const std::vector<std::size_t>& idx, std::string name = {}) const;
};

inline constexpr std::uint16_t kEmbVersion = 1;
inline constexpr std::size_t kEmbHeaderBytes = 16;

/// EMB1: "EMB1", u16 version, u32 dim, u32 rows, u16 reserved, rows*dim f32,
/// rows u16 labels. Little-endian throughout.
std::vector<std::uint8_t> encode_emb(const EmbeddingDataset& ds);
/// class_count is recovered as max label + 1.
EmbeddingDataset decode_emb(std::span<const std::uint8_t> bytes);
void write_emb(const std::string& path, const EmbeddingDataset& ds);
EmbeddingDataset read_emb(const std::string& path);

struct Split {
  EmbeddingDataset train, dev, test;
};

/// Stratified split. Split totals follow largest-remainder rounding of
/// rows * fractions; each class lands within one row of its ideal share.
Split split_dataset(const EmbeddingDataset& ds, std::array<double, 3> fractions, std::uint64_t seed);
/// Per-split row indices behind split_dataset.
std::array<std::vector<std::size_t>, 3> split_indices(const std::vector<std::uint16_t>& labels,
                                                      std::uint32_t class_count, std::array<double, 3> fractions,
                                                      std::uint64_t seed);

}  // namespace hebert::data
