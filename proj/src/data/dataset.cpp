#include "hebert/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hebert/common/binio.hpp"
#include "hebert/common/error.hpp"

namespace hebert::data {

namespace {
constexpr const char* kModule = "dataset-io";
}

void EmbeddingDataset::validate() const {
  require(dim > 0, kModule, ErrorCode::Format, "dimension must be positive");
  require(values.size() == rows() * dim, kModule, ErrorCode::Format, "value count does not match rows * dim");
  for (std::size_t i = 0; i < values.size(); ++i)
    require(std::isfinite(values[i]), kModule, ErrorCode::NonFinite,
            "non-finite value at row " + std::to_string(i / dim) + " column " + std::to_string(i % dim));
  for (std::size_t i = 0; i < rows(); ++i)
    require(labels[i] < class_count, kModule, ErrorCode::Format,
            "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) + " exceeds class count");
}

EmbeddingDataset EmbeddingDataset::subset(const std::vector<std::size_t>& idx, std::string name) const {
  EmbeddingDataset out;
  out.dim = dim;
  out.class_count = class_count;
  out.split_name = std::move(name);
  out.values.reserve(idx.size() * dim);
  out.labels.reserve(idx.size());
  for (auto i : idx) {
    auto r = row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

std::vector<std::uint8_t> encode_emb(const EmbeddingDataset& ds) {
  ds.validate();
  ByteWriter w;
  w.put_magic("EMB1");
  w.put<std::uint16_t>(kEmbVersion);
  w.put<std::uint32_t>(ds.dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.rows()));
  w.put<std::uint16_t>(0);
  w.put_array(std::span<const float>(ds.values));
  w.put_array(std::span<const std::uint16_t>(ds.labels));
  return w.take();
}

EmbeddingDataset decode_emb(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, kModule);
  r.expect_magic("EMB1");
  const auto version = r.get<std::uint16_t>();
  require(version == kEmbVersion, kModule, ErrorCode::Format, "EMB1 version " + std::to_string(version));
  EmbeddingDataset ds;
  ds.dim = r.get<std::uint32_t>();
  const auto rows = r.get<std::uint32_t>();
  (void)r.get<std::uint16_t>();
  require(ds.dim > 0, kModule, ErrorCode::Format, "zero dimension");
  const std::size_t need = static_cast<std::size_t>(rows) * ds.dim * 4 + static_cast<std::size_t>(rows) * 2;
  require(r.remaining() == need, kModule, ErrorCode::Format,
          r.remaining() < need ? "truncated EMB1 body" : "trailing bytes after EMB1 body");
  ds.values.resize(static_cast<std::size_t>(rows) * ds.dim);
  ds.labels.resize(rows);
  r.get_array(std::span<float>(ds.values));
  r.get_array(std::span<std::uint16_t>(ds.labels));
  ds.class_count = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1u;
  ds.validate();
  return ds;
}

void write_emb(const std::string& path, const EmbeddingDataset& ds) { write_file(path, encode_emb(ds), kModule); }

EmbeddingDataset read_emb(const std::string& path) { return decode_emb(read_file(path, kModule)); }

std::array<std::vector<std::size_t>, 3> split_indices(const std::vector<std::uint16_t>& labels,
                                                      std::uint32_t class_count, std::array<double, 3> f,
                                                      std::uint64_t seed) {
  const double sum = f[0] + f[1] + f[2];
  require(std::abs(sum - 1.0) <= 1e-9 && std::all_of(f.begin(), f.end(), [](double x) { return x >= 0; }), kModule,
          ErrorCode::InvalidArgument, "split fractions must be non-negative and sum to 1");
  const std::size_t total = labels.size();
  std::vector<std::vector<std::size_t>> by_class(class_count);
  for (std::size_t i = 0; i < total; ++i) by_class.at(labels[i]).push_back(i);
  const auto nonzero = static_cast<std::size_t>(std::count_if(f.begin(), f.end(), [](double x) { return x > 0; }));
  for (std::uint32_t c = 0; c < class_count; ++c)
    require(by_class[c].empty() || by_class[c].size() >= nonzero, kModule, ErrorCode::InvalidArgument,
            "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) + " rows for " +
                std::to_string(nonzero) + " splits");

  // split totals by largest remainder
  std::array<std::size_t, 3> target{};
  {
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (int s = 0; s < 3; ++s) {
      const double ideal = static_cast<double>(total) * f[s];
      target[s] = static_cast<std::size_t>(std::floor(ideal));
      rem[s] = ideal - static_cast<double>(target[s]);
      used += target[s];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; used < total; ++k, ++used) ++target[order[k % 3]];
  }

  // floor per class, then hand out leftovers to the neediest splits
  std::vector<std::array<std::size_t, 3>> alloc(class_count);
  std::array<std::size_t, 3> need = target;
  std::vector<std::pair<std::size_t, std::uint32_t>> leftovers;
  for (std::uint32_t c = 0; c < class_count; ++c) {
    std::size_t used = 0;
    for (int s = 0; s < 3; ++s) {
      alloc[c][s] = static_cast<std::size_t>(std::floor(static_cast<double>(by_class[c].size()) * f[s]));
      used += alloc[c][s];
      need[s] -= alloc[c][s];
    }
    leftovers.emplace_back(by_class[c].size() - used, c);
  }
  std::stable_sort(leftovers.begin(), leftovers.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (auto [count, c] : leftovers) {
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return need[a] > need[b]; });
    for (std::size_t k = 0; k < count; ++k) {
      const int s = order[k];
      require(need[s] > 0 && f[s] > 0, kModule, ErrorCode::InvalidArgument, "cannot balance stratified split");
      ++alloc[c][s];
      --need[s];
    }
  }

  std::mt19937_64 rng(seed);
  std::array<std::vector<std::size_t>, 3> out;
  for (std::uint32_t c = 0; c < class_count; ++c) {
    auto idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t k = 0; k < alloc[c][s]; ++k) out[s].push_back(idx[pos++]);
  }
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

Split split_dataset(const EmbeddingDataset& ds, std::array<double, 3> fractions, std::uint64_t seed) {
  auto idx = split_indices(ds.labels, ds.class_count, fractions, seed);
  return {ds.subset(idx[0], "train"), ds.subset(idx[1], "dev"), ds.subset(idx[2], "test")};
}

}  // namespace hebert::data
