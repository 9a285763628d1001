#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>

#include "hebert/common/error.hpp"
#include "hebert/data/metrics.hpp"
#include "hebert/data/synthetic.hpp"
#include "hebert/logreg/logreg.hpp"

using namespace hebert;
using namespace hebert::logreg;

namespace {

const minimax::MinimaxPoly& sigmoid15() {
  static const auto p = minimax::remez_fit(minimax::sigmoid_target(), -12, 12, 15);
  return p;
}

struct Desk {
  ckks::CkksContextPtr ctx;
  PackingLayout layout;
  ckks::KeySet keys;
  std::optional<ckks::Evaluator> ev;
  std::optional<ckks::Encryptor> enc;
  explicit Desk(std::uint32_t dim) {
    ctx = ckks::CkksContext::create(ckks::load_preset("desk"));
    layout = PackingLayout::for_dim(dim, ctx->slot_count());
    keys = ckks::keygen(ctx, keygen_options(layout), 21);
    ev.emplace(ctx, &keys.eval);
    enc.emplace(ctx, *keys.pub, 22);
  }
  Refresher debug() const { return Refresher::debug(ctx, *keys.secret, *keys.pub, true, 23); }
};

Desk& desk63() {
  static Desk d(63);
  return d;
}

Desk& desk768() {
  static Desk d(768);
  return d;
}

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::vector<double> replicate(const PackingLayout& l, const std::vector<double>& w) {
  std::vector<double> s(l.slot_count, 0.0);
  for (std::uint32_t r = 0; r < l.rows_per_ct; ++r) std::copy(w.begin(), w.end(), s.begin() + r * l.padded_dim);
  return s;
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

std::pair<data::EmbeddingDataset, data::EmbeddingDataset> split_at(const data::EmbeddingDataset& ds, std::size_t n) {
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < ds.rows(); ++i) (i < n ? a : b).push_back(i);
  return {ds.subset(a, "train"), ds.subset(b, "test")};
}

std::vector<std::size_t> argmax_rows(const std::vector<double>& s, std::size_t k) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i * k < s.size(); ++i)
    out.push_back(static_cast<std::size_t>(std::max_element(s.begin() + i * k, s.begin() + (i + 1) * k) - (s.begin() + i * k)));
  return out;
}

}  // namespace

TEST(Layout, Arithmetic) {
  const auto l = PackingLayout::for_dim(768, 4096);
  EXPECT_EQ(l.padded_dim, 1024u);
  EXPECT_EQ(l.rows_per_ct, 4u);
  EXPECT_EQ(l.bias_slot(), 768u);
  EXPECT_EQ(PackingLayout::for_dim(1023, 4096).padded_dim, 1024u);
  EXPECT_EQ(PackingLayout::for_dim(1024, 4096).padded_dim, 2048u);
  EXPECT_EQ(code_of([] { PackingLayout::for_dim(4096, 4096); }), ErrorCode::LayoutMismatch);
  auto bad = l;
  bad.rows_per_ct = 5;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::LayoutMismatch);

  auto steps = rotation_steps(l);
  std::sort(steps.begin(), steps.end());
  const std::vector<std::int64_t> want{-512, -256, -128, -64, -32, -16, -8, -4, -2, -1,
                                       1,    2,    4,    8,    16,  32,  64,  128, 256, 512, 1024, 2048};
  EXPECT_EQ(steps, want);
  EXPECT_EQ(model_count(2), 1u);
  EXPECT_EQ(model_count(7), 7u);
  EXPECT_THROW(model_count(1), Error);
}

TEST(Pack, RoundtripPaddingAndLabels) {
  auto& d = desk768();
  const auto ds = data::gaussian_blobs(8, 768, 2, 3);
  const auto batches = pack_batch(ds, d.layout, *d.enc);
  ASSERT_EQ(batches.size(), 2u);
  EXPECT_EQ(batches[0].data.level(), 3u);
  ASSERT_EQ(batches[0].labels.size(), 1u);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto rows = unpack(*d.ctx, batches[k].data, d.layout, *d.keys.secret, 4);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::uint32_t j = 0; j < 768; ++j) ASSERT_NEAR(rows[r][j], ds.row(k * 4 + r)[j], 1e-4);
    const auto slots = ckks::decrypt_real(*d.ctx, batches[k].data, *d.keys.secret);
    const auto labels = ckks::decrypt_real(*d.ctx, batches[k].labels[0], *d.keys.secret);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto j = s % 1024;
      const auto r = s / 1024;
      if (j == 768)
        EXPECT_NEAR(slots[s], 1.0, 1e-4);
      else if (j > 768)
        EXPECT_LT(std::abs(slots[s]), 1e-4);
      EXPECT_NEAR(labels[s], ds.labels[k * 4 + r], 1e-4);
    }
  }
}

TEST(Pack, NonFiniteNamesTheRow) {
  auto& d = desk63();
  auto ds = data::gaussian_blobs(70, 63, 2, 4);
  ds.values[66 * 63 + 5] = std::nanf("");
  const auto msg = message_of([&] { pack_batch(ds, d.layout, *d.enc); });
  EXPECT_NE(msg.find("row 66"), std::string::npos) << msg;
  auto wrong = data::gaussian_blobs(4, 10, 2, 4);
  EXPECT_EQ(code_of([&] { pack_batch(wrong, d.layout, *d.enc); }), ErrorCode::LayoutMismatch);
}

TEST(Dot, SelectorOracleAndZero) {
  auto& d = desk768();
  const auto ds = data::gaussian_blobs(4, 768, 2, 5);
  const auto data = pack_batch(ds, d.layout, *d.enc, 3, false)[0].data;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> e0(1024, 0.0), w(1024, 0.0), zero(1024, 0.0);
  e0[0] = 1;
  for (std::uint32_t j = 0; j <= 768; ++j) w[j] = u(rng) / 8;
  for (const auto& [wv, tol] : {std::pair{e0, 1e-3}, std::pair{w, 1e-2}, std::pair{zero, 1e-3}}) {
    const auto wc = d.enc->encrypt_values(replicate(d.layout, wv), d.ctx->max_level());
    const auto z = encrypted_dot(*d.ev, data, wc, d.layout);
    EXPECT_EQ(z.level(), 1u);
    const auto slots = ckks::decrypt_real(*d.ctx, z, *d.keys.secret);
    for (std::size_t r = 0; r < 4; ++r) {
      double want = wv[768];
      for (std::uint32_t j = 0; j < 768; ++j) want += wv[j] * ds.row(r)[j];
      for (std::size_t j = 0; j < 1024; j += 97) EXPECT_NEAR(slots[r * 1024 + j], want, tol);
    }
  }
}

TEST(Dot, MissingRotationKeyIsReported) {
  auto& d = desk63();
  auto keys = ckks::keygen(d.ctx, {}, 1);
  ckks::Evaluator ev(d.ctx, &keys.eval);
  const auto ds = data::gaussian_blobs(4, 63, 2, 5);
  const auto data = pack_batch(ds, d.layout, *d.enc, 3, false)[0].data;
  EXPECT_EQ(code_of([&] { encrypted_dot(ev, data, data, d.layout); }), ErrorCode::MissingKey);
}

TEST(Shadow, GradientMatchesFiniteDifference) {
  const auto& p = sigmoid15();
  // antiderivative of p in monomial form, independent of the trainer's code
  const auto mono = minimax::to_monomial(p);
  auto P = [&](double z) {
    long double s = 0, zk = z;
    for (std::size_t k = 0; k < mono.size(); ++k, zk *= z) s += mono[k] * zk / static_cast<long double>(k + 1);
    return static_cast<double>(s);
  };
  const auto ds = data::gaussian_blobs(64, 15, 2, 7, 0.3, 0.3);
  const auto l = PackingLayout::for_dim(15, 4096);
  std::vector<std::size_t> rows(ds.rows());
  std::iota(rows.begin(), rows.end(), 0);
  std::mt19937_64 rng(8);
  std::vector<double> w(l.padded_dim, 0.0);
  for (std::uint32_t j = 0; j <= 15; ++j) w[j] = std::normal_distribution<double>(0, 1)(rng);
  auto loss = [&](const std::vector<double>& v) {
    long double s = 0;
    for (auto i : rows) {
      double z = v[15];
      for (std::uint32_t j = 0; j < 15; ++j) z += v[j] * ds.row(i)[j];
      s += P(z) - ds.labels[i] * z;
    }
    return static_cast<double>(s / rows.size());
  };
  const auto g = shadow_gradient(ds, rows, w, l, p);
  for (std::uint32_t j = 0; j <= 15; ++j) {
    const double h = 1e-5;
    auto a = w, b = w;
    a[j] += h;
    b[j] -= h;
    const double fd = (loss(a) - loss(b)) / (2 * h);
    EXPECT_NEAR(g[j], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "coordinate " << j;
  }
  for (std::uint32_t j = 16; j < l.padded_dim; ++j) EXPECT_EQ(g[j], 0.0);
}

TEST(Shadow, ClassesAreIndependent) {
  const auto ds = data::gaussian_blobs(7 * 128, 15, 7, 9, 0.3, 0.3);
  const auto l = PackingLayout::for_dim(15, 4096);
  TrainConfig cfg;
  cfg.batch_size = 256;
  cfg.epochs = 2;
  cfg.rng_seed = 4;
  const auto all = shadow_train(ds, l, cfg, sigmoid15());
  ASSERT_EQ(all.w.size(), 7u);
  // class 3 alone, as a relabelled binary problem
  auto bin = ds;
  for (auto& y : bin.labels) y = y == 3;
  bin.class_count = 2;
  const auto one = shadow_train(bin, l, cfg, sigmoid15());
  EXPECT_EQ(one.w[0], all.w[3]);
  EXPECT_EQ(one.u[0], all.u[3]);
}

TEST(Train, MatchesShadowWithDebugRefresh) {
  auto& d = desk63();
  const auto [tr, te] = split_at(data::gaussian_blobs(640, 63, 2, 10, 0.06, 0.2), 512);
  TrainConfig cfg;
  cfg.batch_size = 128;
  cfg.epochs = 2;
  cfg.rng_seed = 11;
  const auto batches = pack_batch(tr, d.layout, *d.enc);
  const auto res = train(*d.ev, batches, 2, d.layout, cfg, sigmoid15(), d.debug());
  EXPECT_TRUE(res.model.insecure_provenance);
  ASSERT_EQ(res.timing.size(), 2u);
  EXPECT_GT(res.timing[0].refreshes, 0u);
  const auto shadow = shadow_train(tr, d.layout, cfg, sigmoid15());
  EXPECT_LE(shadow.max_abs_logit, 12.0);
  EXPECT_EQ(shadow.domain_breaches, 0u);
  EXPECT_LT(shadow.epoch_loss[1], shadow.epoch_loss[0]);
  const auto w = decrypt_weights(*d.ctx, res.model, *d.keys.secret);
  std::vector<double> sw(shadow.w[0].begin(), shadow.w[0].begin() + 64);
  EXPECT_LT(linf(w[0], sw), 1e-2);

  const auto test_batches = pack_batch(te, d.layout, *d.enc, 7, false);
  const auto scores = decrypt_scores(*d.ctx, predict(*d.ev, res.model, test_batches, sigmoid15(), Refresher::none()),
                                     test_batches, d.layout, *d.keys.secret);
  EXPECT_LT(linf(scores, shadow_predict(shadow, te, d.layout, sigmoid15())), 1e-2);
  const auto enc_acc = data::compute_metrics(scores, te.labels, 0.5, 2).accuracy;
  const auto plain_acc =
      data::compute_metrics(shadow_predict(shadow, te, d.layout, sigmoid15()), te.labels, 0.5, 2).accuracy;
  EXPECT_LE(std::abs(enc_acc - plain_acc), 0.02);
}

TEST(Train, OutOfLevelsWithoutRefreshNamesIteration) {
  auto& d = desk63();
  const auto ds = data::gaussian_blobs(128, 63, 2, 12);
  TrainConfig cfg;
  cfg.batch_size = 64;
  const auto batches = pack_batch(ds, d.layout, *d.enc);
  try {
    train(*d.ev, batches, 2, d.layout, cfg, sigmoid15(), Refresher::none());
    FAIL() << "expected OutOfLevels";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfLevels);
    EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([&] { Refresher::debug(d.ctx, *d.keys.secret, *d.keys.pub, false, 1); }),
            ErrorCode::InsecureDisabled);
}

TEST(Train, ConfigValidation) {
  const auto l = PackingLayout::for_dim(768, 4096);
  TrainConfig c;
  EXPECT_NO_THROW(c.validate(l));
  c.batch_size = 130;
  EXPECT_THROW(c.validate(l), Error);
  c = {};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(l), Error);
  c = {};
  c.momentum_gamma = 1.0;
  EXPECT_THROW(c.validate(l), Error);
}

TEST(Predict, ZeroModelGivesOneHalf) {
  auto& d = desk63();
  const auto ds = data::gaussian_blobs(100, 63, 2, 13);
  EncryptedModel m;
  m.layout = d.layout;
  const auto zero = ckks::encode_constant(*d.ctx, 0.0, d.ctx->max_level(), d.ctx->scale_at(d.ctx->max_level()));
  m.models.push_back({d.enc->encrypt(zero), d.enc->encrypt(zero)});
  const auto b = pack_batch(ds, d.layout, *d.enc, 7, false);
  const auto s = decrypt_scores(*d.ctx, predict(*d.ev, m, b, sigmoid15(), Refresher::none()), b, d.layout,
                                *d.keys.secret);
  ASSERT_EQ(s.size(), 100u);
  for (double v : s) EXPECT_NEAR(v, 0.5, 0.0062 + 1e-2);

  // too few levels and no refresh
  const auto low = pack_batch(ds, d.layout, *d.enc, 3, false);
  EXPECT_EQ(code_of([&] { predict(*d.ev, m, low, sigmoid15(), Refresher::none()); }), ErrorCode::OutOfLevels);
  // foreign layout
  auto other = m;
  other.layout = PackingLayout::for_dim(100, 4096);
  EXPECT_EQ(code_of([&] { predict(*d.ev, other, b, sigmoid15(), Refresher::none()); }), ErrorCode::LayoutMismatch);
}

TEST(Train, OneVsRestArgmaxAgrees) {
  auto& d = desk63();
  const auto [tr, te] = split_at(data::gaussian_blobs(7 * 64 + 210, 63, 7, 14, 0.08, 0.2), 7 * 64);
  TrainConfig cfg;
  cfg.batch_size = 128;
  cfg.rng_seed = 15;
  const auto batches = pack_batch(tr, d.layout, *d.enc);
  ASSERT_EQ(batches[0].labels.size(), 7u);
  const auto res = train(*d.ev, batches, 7, d.layout, cfg, sigmoid15(), d.debug());
  ASSERT_EQ(res.model.models.size(), 7u);
  const auto tb = pack_batch(te, d.layout, *d.enc, 7, false);
  const auto s = decrypt_scores(*d.ctx, predict(*d.ev, res.model, tb, sigmoid15(), Refresher::none()), tb, d.layout,
                                *d.keys.secret);
  const auto shadow = shadow_train(tr, d.layout, cfg, sigmoid15());
  const auto a = argmax_rows(s, 7), b = argmax_rows(shadow_predict(shadow, te, d.layout, sigmoid15()), 7);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i];
  EXPECT_GE(static_cast<double>(agree) / a.size(), 0.98);
}

TEST(Train, SeparableReachesHighAccuracy) {
  auto& d = desk768();
  const auto [tr, te] = split_at(data::separable_binary(1200, 768, 16, 0.25, 0.05, 0.2), 1000);
  // plaintext oracle: exact-sigmoid logistic regression, full-batch gradient descent
  std::vector<double> w(769, 0.0);
  for (int it = 0; it < 200; ++it) {
    std::vector<double> g(769, 0.0);
    for (std::size_t i = 0; i < tr.rows(); ++i) {
      double z = w[768];
      for (std::uint32_t j = 0; j < 768; ++j) z += w[j] * tr.row(i)[j];
      const double e = 1 / (1 + std::exp(-z)) - tr.labels[i];
      for (std::uint32_t j = 0; j < 768; ++j) g[j] += e * tr.row(i)[j];
      g[768] += e;
    }
    for (std::size_t j = 0; j < 769; ++j) w[j] -= 1.0 * g[j] / tr.rows();
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < te.rows(); ++i) {
    double z = w[768];
    for (std::uint32_t j = 0; j < 768; ++j) z += w[j] * te.row(i)[j];
    ok += (z >= 0) == (te.labels[i] == 1);
  }
  ASSERT_GE(static_cast<double>(ok) / te.rows(), 0.97);

  // rows have squared norm near 30, lr 1 diverges
  TrainConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.batch_size = 128;
  cfg.epochs = 5;
  cfg.rng_seed = 17;
  const auto shadow = shadow_train(tr, d.layout, cfg, sigmoid15());
  ASSERT_EQ(shadow.domain_breaches, 0u);
  const auto res = train(*d.ev, pack_batch(tr, d.layout, *d.enc), 2, d.layout, cfg, sigmoid15(), d.debug());
  const auto tb = pack_batch(te, d.layout, *d.enc, 7, false);
  const auto s = decrypt_scores(*d.ctx, predict(*d.ev, res.model, tb, sigmoid15(), Refresher::none()), tb, d.layout,
                                *d.keys.secret);
  EXPECT_GE(data::compute_metrics(s, te.labels, 0.5, 2).accuracy, 0.95);
}

TEST(Train, BootstrapRefreshTracksShadow) {
  auto ctx = ckks::CkksContext::create(ckks::load_preset("desk-boot"));
  auto bc = boot::BootstrapContext::create(ctx);
  const auto l = PackingLayout::for_dim(15, ctx->slot_count());
  auto keys = ckks::keygen(ctx, keygen_options(l, true, &bc), 31);
  ckks::Evaluator ev(ctx, &keys.eval);
  ckks::Encryptor enc(ctx, *keys.pub, 32);
  const auto ds = data::gaussian_blobs(512, 15, 2, 18, 0.2, 0.2);
  TrainConfig cfg;
  cfg.batch_size = 256;
  cfg.rng_seed = 19;
  const auto res = train(ev, pack_batch(ds, l, enc), 2, l, cfg, sigmoid15(), Refresher::bootstrap(bc));
  EXPECT_FALSE(res.model.insecure_provenance);
  EXPECT_EQ(res.model.models[0].w.level(), bc.output_level());
  const auto shadow = shadow_train(ds, l, cfg, sigmoid15());
  const auto w = decrypt_weights(*ctx, res.model, *keys.secret);
  EXPECT_LT(linf(w[0], std::vector<double>(shadow.w[0].begin(), shadow.w[0].begin() + 16)), 2e-2);
}

TEST(Threshold, SeparatedScoresPickOneHalf) {
  const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  EXPECT_EQ(tune_threshold(s, y), 0.5);
  const std::vector<std::uint8_t> one{1, 1, 1, 1};
  EXPECT_THROW(tune_threshold(s, one), Error);
}

TEST(Threshold, BeatsEveryGridThreshold) {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> s(300);
    std::vector<std::uint8_t> y(300);
    for (std::size_t i = 0; i < s.size(); ++i) {
      y[i] = rng() % 4 == 0;
      s[i] = std::clamp(0.3 * y[i] + std::normal_distribution<double>(0.4, 0.2)(rng), 0.0, 1.0);
    }
    const double t = tune_threshold(s, y);
    const double best = data::confusion_at(s, y, t).f1();
    for (int g = 0; g <= 1000; ++g) EXPECT_GE(best, data::confusion_at(s, y, g / 1000.0).f1() - 1e-12);
  }
}

TEST(Files, ModelRoundtrip) {
  auto& d = desk63();
  EncryptedModel m;
  m.class_count = 3;
  m.layout = d.layout;
  m.insecure_provenance = true;
  for (int k = 0; k < 3; ++k)
    m.models.push_back({d.enc->encrypt_values(std::vector<double>(64, 0.1 * k), 8),
                        d.enc->encrypt_values(std::vector<double>(64, -0.1 * k), 5)});
  const auto bytes = serialize_model(*d.ctx, m);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HLR1");
  const auto back = deserialize_model(*d.ctx, bytes);
  EXPECT_EQ(back.class_count, 3u);
  EXPECT_EQ(back.layout, m.layout);
  EXPECT_TRUE(back.insecure_provenance);
  EXPECT_EQ(serialize_model(*d.ctx, back), bytes);
  auto bad = bytes;
  bad[1] = 'X';
  EXPECT_EQ(code_of([&] { deserialize_model(*d.ctx, bad); }), ErrorCode::Format);
  bad = bytes;
  bad.resize(bytes.size() - 3);
  EXPECT_THROW(deserialize_model(*d.ctx, bad), Error);
  EXPECT_EQ(timing_csv({{1, 2.5, 3}}), "epoch,seconds,level_refreshes\n1,2.5,3\n");
}
