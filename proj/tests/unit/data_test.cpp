#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "hebert/common/binio.hpp"
#include "hebert/common/error.hpp"
#include "hebert/data/dataset.hpp"
#include "hebert/data/metrics.hpp"
#include "hebert/data/synthetic.hpp"

using namespace hebert;
using namespace hebert::data;

namespace {

EmbeddingDataset small(std::size_t rows, std::uint32_t dim, std::uint32_t classes, std::uint64_t seed) {
  return gaussian_blobs(rows, dim, classes, seed);
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("hebert_" + name)).string();
}

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST(Emb, FileRoundtripIsByteExact) {
  auto ds = small(37, 13, 3, 1);
  const auto path = tmp_path("rt.emb");
  write_emb(path, ds);
  const auto back = read_emb(path);
  EXPECT_EQ(back.dim, ds.dim);
  EXPECT_EQ(back.class_count, 3u);
  EXPECT_EQ(back.labels, ds.labels);
  ASSERT_EQ(back.values.size(), ds.values.size());
  EXPECT_EQ(std::memcmp(back.values.data(), ds.values.data(), ds.values.size() * 4), 0);
  EXPECT_EQ(encode_emb(back), read_file(path, "test"));
  std::filesystem::remove(path);
}

TEST(Emb, SizeArithmetic) {
  auto ds = small(2, 768, 2, 2);
  EXPECT_EQ(encode_emb(ds).size(), 16u + 2 * 768 * 4 + 2 * 2);
  EXPECT_EQ(kEmbHeaderBytes, 16u);
}

TEST(Emb, CorruptInputIsRejected) {
  auto bytes = encode_emb(small(4, 5, 2, 3));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { decode_emb(bad); }), ErrorCode::Format);
  bad = bytes;
  bad.pop_back();
  EXPECT_EQ(code_of([&] { decode_emb(bad); }), ErrorCode::Format);
  bad = bytes;
  bad.push_back(0);
  EXPECT_EQ(code_of([&] { decode_emb(bad); }), ErrorCode::Format);
  bad = bytes;
  bad[4] = 9;  // version
  EXPECT_EQ(code_of([&] { decode_emb(bad); }), ErrorCode::Format);

  auto ds = small(4, 5, 2, 3);
  ds.values[7] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_EQ(code_of([&] { encode_emb(ds); }), ErrorCode::NonFinite);
  bad = bytes;
  const float inf = std::numeric_limits<float>::infinity();
  std::memcpy(bad.data() + 16 + 4 * 3, &inf, 4);
  EXPECT_EQ(code_of([&] { decode_emb(bad); }), ErrorCode::NonFinite);
  EXPECT_EQ(code_of([&] { read_emb(tmp_path("does_not_exist.emb")); }), ErrorCode::Io);
}

TEST(Split, SizesFor19626Rows) {
  std::vector<std::uint16_t> labels(19626);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 7 < 3 ? 1 : 0;
  const std::array<double, 3> f{11634.0 / 19626, 3197.0 / 19626, 4795.0 / 19626};
  const auto s = split_indices(labels, 2, f, 4);
  EXPECT_EQ(s[0].size(), 11634u);
  EXPECT_EQ(s[1].size(), 3197u);
  EXPECT_EQ(s[2].size(), 4795u);
}

TEST(Split, DisjointExhaustiveStratified) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50 + rng() % 500;
    const std::uint32_t k = 2 + rng() % 6;
    std::vector<std::uint16_t> labels(n);
    for (auto& l : labels) l = static_cast<std::uint16_t>(std::min<std::uint64_t>(rng() % (k + 2), k - 1));
    for (std::uint32_t c = 0; c < k; ++c) labels[c] = static_cast<std::uint16_t>(c);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    std::array<double, 3> f{u(rng), u(rng), u(rng)};
    const double sum = f[0] + f[1] + f[2];
    for (auto& x : f) x /= sum;
    // every class needs a row per split
    std::vector<std::size_t> per(k, 0);
    for (auto l : labels) ++per[l];
    if (*std::min_element(per.begin(), per.end()) < 3) continue;

    const auto s = split_indices(labels, k, f, trial);
    std::vector<int> seen(n, 0);
    for (const auto& part : s)
      for (auto i : part) ++seen[i];
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
    for (std::size_t p = 0; p < 3; ++p)
      for (std::uint32_t c = 0; c < k; ++c) {
        const auto got = std::count_if(s[p].begin(), s[p].end(), [&](auto i) { return labels[i] == c; });
        EXPECT_LE(std::abs(static_cast<double>(got) - f[p] * static_cast<double>(per[c])), 1.0 + 1e-9)
            << "trial " << trial << " split " << p << " class " << c;
      }
    EXPECT_EQ(s, split_indices(labels, k, f, trial));
  }
}

TEST(Split, DegenerateFractionsAndErrors) {
  auto ds = small(40, 4, 2, 6);
  const auto s = split_dataset(ds, {1, 0, 0}, 1);
  EXPECT_EQ(s.train.rows(), 40u);
  EXPECT_EQ(s.dev.rows(), 0u);
  EXPECT_EQ(s.test.rows(), 0u);
  EXPECT_EQ(s.train.split_name, "train");

  EXPECT_EQ(code_of([&] { split_dataset(ds, {0.5, 0.4, 0.2}, 1); }), ErrorCode::InvalidArgument);
  std::vector<std::uint16_t> labels{0, 0, 0, 0, 1, 1};
  EXPECT_EQ(code_of([&] { split_indices(labels, 2, {0.4, 0.3, 0.3}, 1); }), ErrorCode::InvalidArgument);
}

TEST(Metrics, HandCase) {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.2};
  const std::vector<std::uint16_t> y{1, 0, 1, 0};
  const auto r = compute_metrics(s, y, 0.5, 2);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
  EXPECT_DOUBLE_EQ(r.auc, 0.75);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  const Confusion c{4, 1, 2, 0};
  EXPECT_DOUBLE_EQ(c.f1(), 8.0 / 11.0);
}

TEST(Metrics, PerfectScores) {
  const std::vector<double> s{0.1, 0.9, 0.2, 0.7};
  const std::vector<std::uint16_t> y{0, 1, 0, 1};
  const auto r = compute_metrics(s, y, 0.5, 2);
  EXPECT_EQ(r.f1, 1.0);
  EXPECT_EQ(r.auc, 1.0);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.macro_f1, 1.0);
}

TEST(Metrics, AucEqualsPairCounting) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> s(1000);
    std::vector<std::uint8_t> pos(1000);
    // coarse grid so ties show up
    for (auto& x : s) x = static_cast<double>(rng() % (trial % 2 ? 50 : 1000000)) / 50.0;
    for (auto& p : pos) p = rng() % 3 == 0;
    EXPECT_EQ(auc(s, pos), auc_pairs(s, pos));
  }
}

TEST(Metrics, AucIsRankStatistic) {
  std::mt19937_64 rng(9);
  std::vector<double> s(300), t(300);
  std::vector<std::uint8_t> pos(300);
  std::normal_distribution<double> n;
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = n(rng);
    pos[i] = s[i] + n(rng) > 0;
    t[i] = std::exp(3 * s[i]) - 7;
  }
  EXPECT_EQ(auc(s, pos), auc(t, pos));
}

TEST(Metrics, PermutationInvariant) {
  auto ds = small(210, 3, 7, 10);
  std::mt19937_64 rng(11);
  std::vector<double> scores(ds.rows() * 7);
  for (auto& x : scores) x = std::uniform_real_distribution<double>(0, 1)(rng);
  const auto a = compute_metrics(scores, ds.labels, 0.5, 7);
  std::vector<std::size_t> perm(ds.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> ps;
  std::vector<std::uint16_t> pl;
  for (auto i : perm) {
    ps.insert(ps.end(), scores.begin() + static_cast<std::ptrdiff_t>(i * 7), scores.begin() + static_cast<std::ptrdiff_t>(i * 7 + 7));
    pl.push_back(ds.labels[i]);
  }
  const auto b = compute_metrics(ps, pl, 0.5, 7);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.macro_f1, b.macro_f1);
  EXPECT_DOUBLE_EQ(a.auc, b.auc);
  for (double v : {a.accuracy, a.macro_f1, a.auc, a.f1}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Metrics, SingleClassAucIsError) {
  const std::vector<double> s{0.1, 0.2};
  const std::vector<std::uint8_t> p{1, 1};
  EXPECT_EQ(code_of([&] { auc(s, p); }), ErrorCode::InvalidArgument);
}

TEST(Metrics, NonFiniteScoreIsError) {
  const std::vector<double> s{0.1, std::nan(""), 0.3};
  const std::vector<std::uint8_t> p{1, 0, 1};
  const std::vector<std::uint16_t> l{1, 0, 1};
  EXPECT_EQ(code_of([&] { auc(s, p); }), ErrorCode::NonFinite);
  EXPECT_EQ(code_of([&] { compute_metrics(s, l, 0.5, 2); }), ErrorCode::NonFinite);
}

TEST(Synthetic, SeparableBinaryHonoursMargin) {
  const auto ds = separable_binary(200, 32, 3, 0.1, 0.1, 0.2);
  EXPECT_EQ(ds.rows(), 200u);
  EXPECT_NO_THROW(ds.validate());
  EXPECT_EQ(encode_emb(ds), encode_emb(separable_binary(200, 32, 3, 0.1, 0.1, 0.2)));
}
