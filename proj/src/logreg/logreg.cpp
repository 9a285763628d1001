#include "hebert/logreg/logreg.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "hebert/ckks/polyeval.hpp"
#include "hebert/ckks/serialize.hpp"
#include "hebert/common/binio.hpp"
#include "hebert/common/error.hpp"
#include "hebert/common/parallel.hpp"

namespace hebert::logreg {

namespace {
constexpr const char* kModule = "he-logreg";
constexpr std::uint16_t kModelVersion = 1;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  x ^= x >> 31;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 29;
  return x;
}

double logit_offset(const minimax::MinimaxPoly& p) {
  return -(p.domain_hi + p.domain_lo) / (p.domain_hi - p.domain_lo);
}

// rows grouped per ciphertext, in dataset order
std::vector<std::pair<std::size_t, std::size_t>> groups(std::size_t rows, std::uint32_t per_ct) {
  std::vector<std::pair<std::size_t, std::size_t>> g;
  for (std::size_t r = 0; r < rows; r += per_ct) g.emplace_back(r, std::min<std::size_t>(per_ct, rows - r));
  return g;
}

double label_for(std::uint16_t label, std::uint32_t model, std::uint32_t class_count) {
  return class_count == 2 ? (label == 1 ? 1.0 : 0.0) : (label == model ? 1.0 : 0.0);
}
}  // namespace

PackingLayout PackingLayout::for_dim(std::uint32_t dim, std::size_t slot_count) {
  PackingLayout l;
  l.dim = dim;
  l.padded_dim = std::bit_ceil(dim + 1);
  l.slot_count = static_cast<std::uint32_t>(slot_count);
  require(l.padded_dim <= slot_count, kModule, ErrorCode::LayoutMismatch,
          "dimension " + std::to_string(dim) + " plus bias does not fit in " + std::to_string(slot_count) + " slots");
  l.rows_per_ct = static_cast<std::uint32_t>(slot_count / l.padded_dim);
  return l;
}

void PackingLayout::validate() const {
  require(dim > 0 && std::has_single_bit(padded_dim) && padded_dim > dim && rows_per_ct > 0 &&
              static_cast<std::size_t>(padded_dim) * rows_per_ct <= slot_count,
          kModule, ErrorCode::LayoutMismatch, "inconsistent packing layout");
}

std::vector<std::int64_t> rotation_steps(const PackingLayout& layout) {
  std::vector<std::int64_t> steps;
  for (std::int64_t s = 1; s < layout.padded_dim; s <<= 1) {
    steps.push_back(s);
    steps.push_back(-s);
  }
  for (std::int64_t s = layout.padded_dim; s < layout.slot_count; s <<= 1) steps.push_back(s);
  return steps;
}

ckks::KeygenOptions keygen_options(const PackingLayout& layout, bool with_bootstrap_keys,
                                   const boot::BootstrapContext* bc) {
  ckks::KeygenOptions o;
  o.rotation_steps = rotation_steps(layout);
  if (with_bootstrap_keys) {
    require(bc != nullptr, kModule, ErrorCode::InvalidArgument, "bootstrap keys need a bootstrap context");
    const auto b = bc->keygen_options();
    o.rotation_steps.insert(o.rotation_steps.end(), b.rotation_steps.begin(), b.rotation_steps.end());
    o.conjugation = b.conjugation;
  }
  std::sort(o.rotation_steps.begin(), o.rotation_steps.end());
  o.rotation_steps.erase(std::unique(o.rotation_steps.begin(), o.rotation_steps.end()), o.rotation_steps.end());
  return o;
}

std::vector<double> pack_rows(const PackingLayout& layout, std::span<const float> values, std::size_t first_row,
                              std::size_t rows) {
  require(rows <= layout.rows_per_ct, kModule, ErrorCode::LayoutMismatch, "too many rows for one ciphertext");
  std::vector<double> slots(layout.slot_count, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* src = values.data() + (first_row + r) * layout.dim;
    double* dst = slots.data() + r * layout.padded_dim;
    for (std::uint32_t j = 0; j < layout.dim; ++j) {
      require(std::isfinite(src[j]), kModule, ErrorCode::NonFinite,
              "non-finite value in row " + std::to_string(first_row + r));
      dst[j] = src[j];
    }
    dst[layout.bias_slot()] = 1.0;
  }
  return slots;
}

std::vector<double> pack_labels(const PackingLayout& layout, std::span<const double> y) {
  require(y.size() <= layout.rows_per_ct, kModule, ErrorCode::LayoutMismatch, "too many labels for one ciphertext");
  std::vector<double> slots(layout.slot_count, 0.0);
  for (std::size_t r = 0; r < y.size(); ++r)
    std::fill_n(slots.begin() + static_cast<std::ptrdiff_t>(r * layout.padded_dim), layout.padded_dim, y[r]);
  return slots;
}

std::uint32_t model_count(std::uint32_t class_count) {
  require(class_count >= 2, kModule, ErrorCode::InvalidArgument, "need at least two classes");
  return class_count == 2 ? 1 : class_count;
}

std::vector<EncryptedBatch> pack_batch(const data::EmbeddingDataset& ds, const PackingLayout& layout,
                                       ckks::Encryptor& enc, std::size_t target_level, bool with_labels) {
  layout.validate();
  require(ds.dim == layout.dim, kModule, ErrorCode::LayoutMismatch,
          "dataset dimension " + std::to_string(ds.dim) + " does not match layout " + std::to_string(layout.dim));
  require(target_level <= enc.context()->max_level(), kModule, ErrorCode::InvalidArgument, "level above the chain");
  const auto models = with_labels ? model_count(ds.class_count) : 0;
  std::vector<EncryptedBatch> out;
  for (auto [first, rows] : groups(ds.rows(), layout.rows_per_ct)) {
    EncryptedBatch b;
    b.layout = layout;
    b.rows = static_cast<std::uint32_t>(rows);
    b.data = enc.encrypt_values(pack_rows(layout, ds.values, first, rows), target_level);
    for (std::uint32_t m = 0; m < models; ++m) {
      std::vector<double> y(rows);
      for (std::size_t r = 0; r < rows; ++r) y[r] = label_for(ds.labels[first + r], m, ds.class_count);
      b.labels.push_back(enc.encrypt_values(pack_labels(layout, y), target_level));
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<std::vector<double>> unpack(const ckks::CkksContext& ctx, const Ciphertext& ct,
                                        const PackingLayout& layout, const ckks::SecretKey& sk, std::size_t rows) {
  const auto slots = ckks::decrypt_real(ctx, ct, sk);
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < rows; ++r) {
    auto first = slots.begin() + static_cast<std::ptrdiff_t>(r * layout.padded_dim);
    out.emplace_back(first, first + layout.dim);
  }
  return out;
}

Ciphertext encrypted_dot(const ckks::Evaluator& ev, const Ciphertext& data, const Ciphertext& weights,
                         const PackingLayout& layout, double post_scale) {
  require(data.level() >= 2, kModule, ErrorCode::OutOfLevels,
          "dot product needs level 2, data is at level " + std::to_string(data.level()));
  for (std::int64_t s = 1; s < layout.padded_dim; s <<= 1)
    require(ev.can_rotate(s) && ev.can_rotate(-s), kModule, ErrorCode::MissingKey,
            "missing rotation key for step " + std::to_string(s));
  Ciphertext w = weights.level() > data.level() ? ev.to_level(weights, data.level()) : weights;
  Ciphertext acc = ev.mult(data, w);
  for (std::int64_t s = 1; s < layout.padded_dim; s <<= 1) ev.add_inplace(acc, ev.rotate(acc, s));
  std::vector<double> mask(layout.slot_count, 0.0);
  for (std::uint32_t r = 0; r < layout.rows_per_ct; ++r) mask[static_cast<std::size_t>(r) * layout.padded_dim] = post_scale;
  acc = ev.mult_values(acc, std::span<const double>(mask));
  for (std::int64_t s = 1; s < layout.padded_dim; s <<= 1) ev.add_inplace(acc, ev.rotate(acc, -s));
  return acc;
}

std::string to_string(RefreshStrategy s) {
  switch (s) {
    case RefreshStrategy::None: return "none";
    case RefreshStrategy::Bootstrap: return "bootstrap";
    case RefreshStrategy::Debug: return "debug";
  }
  return "none";
}

RefreshStrategy refresh_from_string(const std::string& s) {
  if (s == "none") return RefreshStrategy::None;
  if (s == "bootstrap") return RefreshStrategy::Bootstrap;
  if (s == "debug") return RefreshStrategy::Debug;
  fail(kModule, ErrorCode::InvalidArgument, "unknown refresh strategy " + s);
}

Refresher Refresher::none() { return {}; }

Refresher Refresher::bootstrap(const boot::BootstrapContext& bc) {
  Refresher r;
  r.strategy_ = RefreshStrategy::Bootstrap;
  r.bc_ = &bc;
  return r;
}

Refresher Refresher::debug(ckks::CkksContextPtr ctx, const ckks::SecretKey& sk, const ckks::PublicKey& pk,
                           bool insecure_enabled, std::uint64_t seed) {
  require(insecure_enabled, "ckks-bootstrap", ErrorCode::InsecureDisabled,
          "debug refresh decrypts with the secret key; pass --insecure-debug-refresh to allow it");
  Refresher r;
  r.strategy_ = RefreshStrategy::Debug;
  r.ctx_ = std::move(ctx);
  r.sk_ = &sk;
  r.pk_ = &pk;
  r.enabled_ = insecure_enabled;
  r.seed_ = seed;
  return r;
}

std::size_t Refresher::output_level(const ckks::CkksContext& ctx) const {
  switch (strategy_) {
    case RefreshStrategy::Bootstrap: return bc_->output_level();
    case RefreshStrategy::Debug: return ctx.max_level();
    default: return 0;
  }
}

Ciphertext Refresher::operator()(const ckks::Evaluator& ev, const Ciphertext& ct, std::uint64_t tag) const {
  switch (strategy_) {
    case RefreshStrategy::Bootstrap: return boot::bootstrap(ev, *bc_, ct);
    case RefreshStrategy::Debug: return boot::debug_refresh(ctx_, ct, *sk_, *pk_, enabled_, mix(seed_, tag));
    default: fail(kModule, ErrorCode::OutOfLevels, "refresh requested but no refresh strategy configured");
  }
}

void TrainConfig::validate(const PackingLayout& layout) const {
  require(learning_rate > 0, kModule, ErrorCode::InvalidArgument, "learning rate must be positive");
  require(momentum_gamma >= 0 && momentum_gamma < 1, kModule, ErrorCode::InvalidArgument, "gamma must be in [0,1)");
  require(batch_size > 0 && batch_size % layout.rows_per_ct == 0, kModule, ErrorCode::InvalidArgument,
          "batch size must be a multiple of " + std::to_string(layout.rows_per_ct) + " rows per ciphertext");
  require(epochs >= 1, kModule, ErrorCode::InvalidArgument, "need at least one epoch");
}

std::size_t refreshed_level_needed(const minimax::MinimaxPoly& sigmoid) {
  return ckks::poly_depth(sigmoid.degree) + 2;
}

double logit_prescale(const minimax::MinimaxPoly& sigmoid) { return 2.0 / (sigmoid.domain_hi - sigmoid.domain_lo); }

namespace {

// ciphertext order per epoch, shared by every class and by the shadow
std::vector<std::vector<std::size_t>> epoch_orders(std::size_t n_ct, const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> perm(n_ct);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    std::shuffle(perm.begin(), perm.end(), rng);
    out.push_back(perm);
  }
  return out;
}

void check_sigmoid(const minimax::MinimaxPoly& p) {
  require(p.domain_hi > p.domain_lo && p.degree >= 1, kModule, ErrorCode::InvalidArgument, "bad sigmoid polynomial");
}

void check_layout(const EncryptedBatch& b, const PackingLayout& layout) {
  require(b.layout == layout, kModule, ErrorCode::LayoutMismatch,
          "batch packed for dim " + std::to_string(b.layout.dim) + " / " + std::to_string(b.layout.slot_count) +
              " slots, model expects dim " + std::to_string(layout.dim) + " / " + std::to_string(layout.slot_count));
}

// sum over the rows_per_ct blocks, replicated back into every block
void sum_blocks(const ckks::Evaluator& ev, Ciphertext& ct, const PackingLayout& layout) {
  for (std::int64_t s = layout.padded_dim; s < layout.slot_count; s <<= 1) ev.add_inplace(ct, ev.rotate(ct, s));
}

Ciphertext logits(const ckks::Evaluator& ev, const Ciphertext& data, const Ciphertext& w, const PackingLayout& layout,
                  const minimax::MinimaxPoly& sigmoid) {
  Ciphertext z = encrypted_dot(ev, data, w, layout, logit_prescale(sigmoid));
  const double off = logit_offset(sigmoid);
  if (off != 0.0) z = ev.add_const(z, off);
  return z;
}

}  // namespace

TrainResult train(const ckks::Evaluator& ev, const std::vector<EncryptedBatch>& batches, std::uint32_t class_count,
                  const PackingLayout& layout, const TrainConfig& cfg, const minimax::MinimaxPoly& sigmoid,
                  const Refresher& refresher, const ProgressFn& progress) {
  layout.validate();
  cfg.validate(layout);
  check_sigmoid(sigmoid);
  require(!batches.empty(), kModule, ErrorCode::InvalidArgument, "empty training set");
  const auto& ctx = *ev.context();
  const std::uint32_t models = model_count(class_count);
  for (const auto& b : batches) check_layout(b, layout);
  for (const auto& b : batches)
    require(b.labels.size() == models, kModule, ErrorCode::LayoutMismatch,
            "batch carries " + std::to_string(b.labels.size()) + " label ciphertexts, expected " +
                std::to_string(models));
  const std::size_t data_level = batches.front().data.level();
  const std::size_t z_needed = refreshed_level_needed(sigmoid);
  const std::size_t per_batch = cfg.batch_size / layout.rows_per_ct;
  const auto orders = epoch_orders(batches.size(), cfg);
  const std::size_t top = refresher.strategy() == RefreshStrategy::None ? ctx.max_level() : refresher.output_level(ctx);

  TrainResult res;
  res.model.class_count = class_count;
  res.model.layout = layout;
  res.model.insecure_provenance = refresher.insecure();
  res.timing.resize(cfg.epochs);
  for (std::size_t e = 0; e < cfg.epochs; ++e) res.timing[e].epoch = e + 1;

  const auto zero = ckks::encode_constant(ctx, 0.0, top, ctx.scale_at(top));
  for (std::uint32_t m = 0; m < models; ++m) {
    ClassModel cm{ckks::trivial_ciphertext(ctx, zero), ckks::trivial_ciphertext(ctx, zero)};
    std::size_t iteration = 0;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      const auto t0 = std::chrono::steady_clock::now();
      std::size_t refreshes = 0;
      const auto& order = orders[e];
      for (std::size_t start = 0; start < order.size(); start += per_batch, ++iteration) {
        const std::size_t end = std::min(order.size(), start + per_batch);
        if (progress) progress(m, e, iteration);
        std::vector<Ciphertext> parts(end - start);
        std::vector<std::uint8_t> refreshed(end - start, 0);
        parallel_for(end - start, [&](std::size_t k) {
          const auto& b = batches[order[start + k]];
          Ciphertext z = logits(ev, b.data, cm.w, layout, sigmoid);
          if (z.level() < z_needed) {
            if (refresher.strategy() == RefreshStrategy::None)
              fail(kModule, ErrorCode::OutOfLevels,
                   "iteration " + std::to_string(iteration) + ": logits at level " + std::to_string(z.level()) +
                       " but the sigmoid needs " + std::to_string(z_needed) + "; enable bootstrap refresh");
            z = refresher(ev, z, mix(mix(m, iteration), k));
            refreshed[k] = 1;
          }
          Ciphertext d = ev.sub(ckks::eval_chebyshev(ev, z, sigmoid.cheb_coeffs), b.labels[m]);
          Ciphertext r = ev.mult(d, b.data);
          sum_blocks(ev, r, layout);
          parts[k] = std::move(r);
        });
        refreshes += static_cast<std::size_t>(std::count(refreshed.begin(), refreshed.end(), 1));
        std::size_t rows = 0;
        for (std::size_t k = start; k < end; ++k) rows += batches[order[k]].rows;
        Ciphertext acc = parts[0];
        for (std::size_t k = 1; k < parts.size(); ++k) ev.add_inplace(acc, parts[k]);

        require(acc.level() >= 1, kModule, ErrorCode::OutOfLevels,
                "iteration " + std::to_string(iteration) + ": gradient reached level 0");
        const double lr_b = cfg.learning_rate / static_cast<double>(rows);
        const double g = cfg.momentum_gamma;
        const std::size_t lvl = acc.level() - 1;
        const double sc = ctx.scale_at(lvl);
        Ciphertext g1 = ev.mult_const(acc, lr_b, lvl, sc);
        Ciphertext g2 = ev.mult_const(acc, lr_b * (1.0 + g), lvl, sc);
        // u' = g u + lr grad ; w' = w - (1+g) lr grad - g^2 u
        Ciphertext u_new = ev.add(ev.mult_const(cm.u, g, lvl, sc), g1);
        Ciphertext w_new = ev.sub(ev.sub(ev.to_level(cm.w, lvl), g2), ev.mult_const(cm.u, g * g, lvl, sc));
        const bool last = e + 1 == cfg.epochs && end == order.size();
        if (w_new.level() < std::max<std::size_t>(data_level, 2) || last) {
          if (refresher.strategy() != RefreshStrategy::None) {
            w_new = refresher(ev, w_new, mix(mix(m, iteration), 1u << 20));
            u_new = refresher(ev, u_new, mix(mix(m, iteration), 1u << 21));
            refreshes += 2;
          } else if (!last) {
            fail(kModule, ErrorCode::OutOfLevels,
                 "iteration " + std::to_string(iteration) + ": weights at level " + std::to_string(w_new.level()) +
                     " cannot meet data at level " + std::to_string(data_level) + "; enable bootstrap refresh");
          }
        }
        cm.w = std::move(w_new);
        cm.u = std::move(u_new);
      }
      res.timing[e].seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      res.timing[e].refreshes += refreshes;
    }
    res.model.models.push_back(std::move(cm));
  }
  return res;
}

std::vector<std::vector<Ciphertext>> predict(const ckks::Evaluator& ev, const EncryptedModel& model,
                                             const std::vector<EncryptedBatch>& batches,
                                             const minimax::MinimaxPoly& sigmoid, const Refresher& refresher) {
  check_sigmoid(sigmoid);
  model.layout.validate();
  for (const auto& b : batches) check_layout(b, model.layout);
  const std::size_t depth = ckks::poly_depth(sigmoid.degree);
  std::vector<std::vector<Ciphertext>> out(model.models.size());
  for (std::size_t m = 0; m < model.models.size(); ++m) {
    out[m].resize(batches.size());
    parallel_for(batches.size(), [&](std::size_t k) {
      const auto& b = batches[k];
      Ciphertext z = logits(ev, b.data, model.models[m].w, model.layout, sigmoid);
      if (z.level() < depth) {
        if (refresher.strategy() == RefreshStrategy::None)
          fail(kModule, ErrorCode::OutOfLevels,
               "logits at level " + std::to_string(z.level()) + " but the sigmoid needs " + std::to_string(depth) +
                   "; encrypt inference data at level >= " + std::to_string(depth + 2) + " or enable bootstrap");
        z = refresher(ev, z, mix(m, k));
      }
      out[m][k] = ckks::eval_chebyshev(ev, z, sigmoid.cheb_coeffs);
    });
  }
  return out;
}

std::vector<double> decrypt_scores(const ckks::CkksContext& ctx, const std::vector<std::vector<Ciphertext>>& scores,
                                   const std::vector<std::uint32_t>& rows_per_batch, const PackingLayout& layout,
                                   const ckks::SecretKey& sk) {
  const std::size_t models = scores.size();
  const std::size_t total = std::accumulate(rows_per_batch.begin(), rows_per_batch.end(), std::size_t{0});
  std::vector<double> out(total * models);
  for (std::size_t m = 0; m < models; ++m) {
    require(scores[m].size() == rows_per_batch.size(), kModule, ErrorCode::LayoutMismatch,
            "score ciphertext count does not match the batch count");
    std::size_t row = 0;
    for (std::size_t k = 0; k < rows_per_batch.size(); ++k) {
      const auto slots = ckks::decrypt_real(ctx, scores[m][k], sk);
      for (std::uint32_t r = 0; r < rows_per_batch[k]; ++r, ++row)
        out[row * models + m] = slots[static_cast<std::size_t>(r) * layout.padded_dim];
    }
  }
  return out;
}

std::vector<double> decrypt_scores(const ckks::CkksContext& ctx, const std::vector<std::vector<Ciphertext>>& scores,
                                   const std::vector<EncryptedBatch>& batches, const PackingLayout& layout,
                                   const ckks::SecretKey& sk) {
  std::vector<std::uint32_t> rows;
  for (const auto& b : batches) rows.push_back(b.rows);
  return decrypt_scores(ctx, scores, rows, layout, sk);
}

std::vector<std::vector<double>> decrypt_weights(const ckks::CkksContext& ctx, const EncryptedModel& model,
                                                 const ckks::SecretKey& sk) {
  std::vector<std::vector<double>> out;
  for (const auto& cm : model.models) {
    const auto slots = ckks::decrypt_real(ctx, cm.w, sk);
    out.emplace_back(slots.begin(), slots.begin() + model.layout.dim + 1);
  }
  return out;
}

double tune_threshold(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  require(scores.size() == positive.size() && !scores.empty(), kModule, ErrorCode::InvalidArgument,
          "scores and labels must be non-empty and aligned");
  const auto npos = std::count(positive.begin(), positive.end(), 1);
  require(npos > 0 && npos < static_cast<std::ptrdiff_t>(positive.size()), kModule, ErrorCode::InvalidArgument,
          "threshold tuning needs both classes in the dev set");
  for (auto v : scores) require(std::isfinite(v), kModule, ErrorCode::NonFinite, "non-finite dev score");
  std::vector<double> u(scores.begin(), scores.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  std::vector<double> cand{0.5, u.front()};
  for (std::size_t i = 1; i < u.size(); ++i) cand.push_back((u[i - 1] + u[i]) / 2);

  // sweep: sort once, count positives above each candidate
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::sort(cand.begin(), cand.end(), std::greater<>());
  double best_f1 = -1, best_t = 0.5;
  std::size_t tp = 0, fp = 0, k = 0;
  for (double t : cand) {
    while (k < idx.size() && scores[idx[k]] >= t) {
      (positive[idx[k]] ? tp : fp)++;
      ++k;
    }
    const double fn = static_cast<double>(npos) - static_cast<double>(tp);
    const double f1 = 2.0 * static_cast<double>(tp) / (2.0 * static_cast<double>(tp) + static_cast<double>(fp) + fn);
    if (f1 > best_f1 + 1e-15 || (std::abs(f1 - best_f1) <= 1e-15 && std::abs(t - 0.5) < std::abs(best_t - 0.5))) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return best_t;
}

// ---- shadow ----

namespace {

double dot_padded(const std::vector<double>& w, std::span<const float> x, std::uint32_t dim) {
  double z = w[dim];
  for (std::uint32_t j = 0; j < dim; ++j) z += w[j] * x[j];
  return z;
}

// (1/12-folded polynomial) loss whose derivative in z is p(z) - y
double poly_loss(const minimax::MinimaxPoly& p, double z, double y) {
  // antiderivative of the Chebyshev series by Simpson on a fine grid
  const int n = 64;
  const double h = z / n;
  double s = minimax::eval_cheb(p, 0.0) + minimax::eval_cheb(p, z);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * minimax::eval_cheb(p, i * h);
  return s * h / 3.0 - y * z;
}

}  // namespace

std::vector<double> shadow_gradient(const data::EmbeddingDataset& ds, const std::vector<std::size_t>& rows,
                                    const std::vector<double>& w, const PackingLayout& layout,
                                    const minimax::MinimaxPoly& sigmoid, std::uint16_t positive_class) {
  std::vector<double> g(layout.padded_dim, 0.0);
  for (auto i : rows) {
    auto x = ds.row(i);
    const double y = ds.labels[i] == positive_class ? 1.0 : 0.0;
    const double d = minimax::eval_cheb(sigmoid, dot_padded(w, x, layout.dim)) - y;
    for (std::uint32_t j = 0; j < layout.dim; ++j) g[j] += d * x[j];
    g[layout.dim] += d;
  }
  for (auto& v : g) v /= static_cast<double>(rows.size());
  return g;
}

ShadowModel shadow_train(const data::EmbeddingDataset& ds, const PackingLayout& layout, const TrainConfig& cfg,
                         const minimax::MinimaxPoly& sigmoid) {
  layout.validate();
  cfg.validate(layout);
  const std::uint32_t models = model_count(ds.class_count);
  const auto grp = groups(ds.rows(), layout.rows_per_ct);
  const auto orders = epoch_orders(grp.size(), cfg);
  const std::size_t per_batch = cfg.batch_size / layout.rows_per_ct;
  ShadowModel sm;
  sm.w.assign(models, std::vector<double>(layout.padded_dim, 0.0));
  sm.u = sm.w;
  sm.epoch_loss.assign(cfg.epochs, 0.0);
  const double lo = sigmoid.domain_lo, hi = sigmoid.domain_hi;
  for (std::uint32_t m = 0; m < models; ++m) {
    auto& w = sm.w[m];
    auto& u = sm.u[m];
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      const auto& order = orders[e];
      double loss = 0;
      for (std::size_t start = 0; start < order.size(); start += per_batch) {
        const std::size_t end = std::min(order.size(), start + per_batch);
        std::vector<double> s(layout.padded_dim, 0.0);
        std::size_t rows = 0;
        for (std::size_t k = start; k < end; ++k) {
          auto [first, count] = grp[order[k]];
          for (std::size_t i = first; i < first + count; ++i, ++rows) {
            auto x = ds.row(i);
            const double z = dot_padded(w, x, layout.dim);
            sm.max_abs_logit = std::max(sm.max_abs_logit, std::abs(z));
            if (z < lo || z > hi) ++sm.domain_breaches;
            const double y = label_for(ds.labels[i], m, ds.class_count);
            if (m == 0) loss += poly_loss(sigmoid, z, y);
            const double d = minimax::eval_cheb(sigmoid, z) - y;
            for (std::uint32_t j = 0; j < layout.dim; ++j) s[j] += d * x[j];
            s[layout.dim] += d;
          }
        }
        const double lr_b = cfg.learning_rate / static_cast<double>(rows);
        const double g = cfg.momentum_gamma;
        for (std::uint32_t j = 0; j < layout.padded_dim; ++j) {
          const double u_old = u[j];
          u[j] = g * u_old + lr_b * s[j];
          w[j] = w[j] - lr_b * (1.0 + g) * s[j] - g * g * u_old;
        }
      }
      if (m == 0) sm.epoch_loss[e] = loss / static_cast<double>(ds.rows());
    }
  }
  return sm;
}

std::vector<double> shadow_predict(const ShadowModel& m, const data::EmbeddingDataset& ds, const PackingLayout& layout,
                                   const minimax::MinimaxPoly& sigmoid) {
  const std::size_t models = m.w.size();
  std::vector<double> out(ds.rows() * models);
  for (std::size_t i = 0; i < ds.rows(); ++i)
    for (std::size_t k = 0; k < models; ++k)
      out[i * models + k] = minimax::eval_cheb(sigmoid, dot_padded(m.w[k], ds.row(i), layout.dim));
  return out;
}

// ---- files ----

namespace {

void put_layout(ByteWriter& w, const PackingLayout& l) {
  w.put<std::uint32_t>(l.dim);
  w.put<std::uint32_t>(l.padded_dim);
  w.put<std::uint32_t>(l.rows_per_ct);
  w.put<std::uint32_t>(l.slot_count);
}

PackingLayout get_layout(ByteReader& r, const ckks::CkksContext& ctx) {
  PackingLayout l;
  l.dim = r.get<std::uint32_t>();
  l.padded_dim = r.get<std::uint32_t>();
  l.rows_per_ct = r.get<std::uint32_t>();
  l.slot_count = r.get<std::uint32_t>();
  l.validate();
  require(l.slot_count == ctx.slot_count(), kModule, ErrorCode::LayoutMismatch,
          "layout built for " + std::to_string(l.slot_count) + " slots, preset has " +
              std::to_string(ctx.slot_count()));
  return l;
}

void check_version(ByteReader& r, const char* what) {
  const auto v = r.get<std::uint16_t>();
  require(v == kModelVersion, kModule, ErrorCode::Format, std::string(what) + " version " + std::to_string(v));
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ckks::CkksContext& ctx, const EncryptedModel& m) {
  ByteWriter w;
  w.put_magic("HLR1");
  w.put<std::uint16_t>(kModelVersion);
  w.put<std::uint32_t>(m.class_count);
  put_layout(w, m.layout);
  w.put<std::uint8_t>(m.insecure_provenance ? 1 : 0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.models.size()));
  for (const auto& cm : m.models) {
    w.put_blob(ckks::serialize(ctx, cm.w));
    w.put_blob(ckks::serialize(ctx, cm.u));
  }
  return w.take();
}

EncryptedModel deserialize_model(const ckks::CkksContext& ctx, std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, kModule);
  r.expect_magic("HLR1");
  check_version(r, "HLR1");
  EncryptedModel m;
  m.class_count = r.get<std::uint32_t>();
  m.layout = get_layout(r, ctx);
  const auto prov = r.get<std::uint8_t>();
  require(prov <= 1, kModule, ErrorCode::Format, "bad provenance flag");
  m.insecure_provenance = prov == 1;
  const auto n = r.get<std::uint32_t>();
  require(n == model_count(m.class_count), kModule, ErrorCode::Format, "model count does not match class count");
  for (std::uint32_t k = 0; k < n; ++k) {
    ClassModel cm;
    cm.w = ckks::deserialize_ciphertext(ctx, r.get_blob());
    cm.u = ckks::deserialize_ciphertext(ctx, r.get_blob());
    cm.w.insecure_provenance = cm.u.insecure_provenance = m.insecure_provenance;
    m.models.push_back(std::move(cm));
  }
  require(r.done(), kModule, ErrorCode::Format, "trailing bytes after HLR1 model");
  return m;
}

std::vector<std::uint8_t> serialize_dataset(const ckks::CkksContext& ctx, const EncryptedDataset& d) {
  ByteWriter w;
  w.put_magic("HCT1");
  w.put<std::uint16_t>(kModelVersion);
  w.put<std::uint32_t>(d.class_count);
  put_layout(w, d.layout);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(d.batches.size()));
  for (const auto& b : d.batches) {
    w.put<std::uint32_t>(b.rows);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(b.labels.size()));
    w.put_blob(ckks::serialize(ctx, b.data));
    for (const auto& y : b.labels) w.put_blob(ckks::serialize(ctx, y));
  }
  return w.take();
}

EncryptedDataset deserialize_dataset(const ckks::CkksContext& ctx, std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, kModule);
  r.expect_magic("HCT1");
  check_version(r, "HCT1");
  EncryptedDataset d;
  d.class_count = r.get<std::uint32_t>();
  d.layout = get_layout(r, ctx);
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < n; ++k) {
    EncryptedBatch b;
    b.layout = d.layout;
    b.rows = r.get<std::uint32_t>();
    require(b.rows >= 1 && b.rows <= d.layout.rows_per_ct, kModule, ErrorCode::Format, "bad row count in HCT1");
    const auto labels = r.get<std::uint32_t>();
    require(labels == 0 || labels == model_count(d.class_count), kModule, ErrorCode::Format,
            "label ciphertext count does not match class count");
    b.data = ckks::deserialize_ciphertext(ctx, r.get_blob());
    for (std::uint32_t m = 0; m < labels; ++m) b.labels.push_back(ckks::deserialize_ciphertext(ctx, r.get_blob()));
    d.batches.push_back(std::move(b));
  }
  require(r.done(), kModule, ErrorCode::Format, "trailing bytes after HCT1 dataset");
  return d;
}

std::vector<std::uint8_t> serialize_scores(const ckks::CkksContext& ctx, const EncryptedScores& s) {
  ByteWriter w;
  w.put_magic("HSC1");
  w.put<std::uint16_t>(kModelVersion);
  w.put<std::uint32_t>(s.class_count);
  put_layout(w, s.layout);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.rows_per_batch.size()));
  for (auto r : s.rows_per_batch) w.put<std::uint32_t>(r);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.scores.size()));
  for (const auto& per_model : s.scores) {
    require(per_model.size() == s.rows_per_batch.size(), kModule, ErrorCode::LayoutMismatch,
            "score ciphertext count does not match the batch count");
    for (const auto& ct : per_model) w.put_blob(ckks::serialize(ctx, ct));
  }
  return w.take();
}

EncryptedScores deserialize_scores(const ckks::CkksContext& ctx, std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, kModule);
  r.expect_magic("HSC1");
  check_version(r, "HSC1");
  EncryptedScores s;
  s.class_count = r.get<std::uint32_t>();
  s.layout = get_layout(r, ctx);
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < n; ++k) s.rows_per_batch.push_back(r.get<std::uint32_t>());
  const auto models = r.get<std::uint32_t>();
  require(models == model_count(s.class_count), kModule, ErrorCode::Format, "model count does not match class count");
  s.scores.resize(models);
  for (auto& per_model : s.scores)
    for (std::uint32_t k = 0; k < n; ++k) per_model.push_back(ckks::deserialize_ciphertext(ctx, r.get_blob()));
  require(r.done(), kModule, ErrorCode::Format, "trailing bytes after HSC1 scores");
  return s;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
  std::ostringstream os;
  os << "epoch,seconds,level_refreshes\n";
  for (const auto& r : rows) os << r.epoch << ',' << r.seconds << ',' << r.refreshes << '\n';
  return os.str();
}

}  // namespace hebert::logreg
