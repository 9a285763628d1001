#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hebert/bootstrap/bootstrap.hpp"
#include "hebert/ckks/crypto.hpp"
#include "hebert/ckks/evaluator.hpp"
#include "hebert/data/dataset.hpp"
#include "hebert/minimax/remez.hpp"

namespace hebert::logreg {

using ckks::Ciphertext;

/// One example per contiguous block of padded_dim slots. Feature `dim` of
/// every block is a constant 1 that carries the bias.
struct PackingLayout {
  std::uint32_t dim = 0;
  std::uint32_t padded_dim = 0;
  std::uint32_t rows_per_ct = 0;
  std::uint32_t slot_count = 0;

  static PackingLayout for_dim(std::uint32_t dim, std::size_t slot_count);
  std::uint32_t bias_slot() const { return dim; }
  void validate() const;
  friend bool operator==(const PackingLayout&, const PackingLayout&) = default;
};

/// Rotation steps used by the dot product, its broadcast and the cross-block
/// gradient sum.
std::vector<std::int64_t> rotation_steps(const PackingLayout& layout);
ckks::KeygenOptions keygen_options(const PackingLayout& layout, bool with_bootstrap_keys = false,
                                   const boot::BootstrapContext* bc = nullptr);

/// Slot image of up to rows_per_ct rows (bias feature included).
std::vector<double> pack_rows(const PackingLayout& layout, std::span<const float> values, std::size_t first_row,
                              std::size_t rows);
/// Label image: y replicated across each row's block.
std::vector<double> pack_labels(const PackingLayout& layout, std::span<const double> y);

/// Client-side encrypted batch unit: one data ciphertext and one label
/// ciphertext per trained model.
struct EncryptedBatch {
  PackingLayout layout;
  Ciphertext data;
  std::vector<Ciphertext> labels;
  std::uint32_t rows = 0;
};

/// Number of binary models: 1 for two classes, class_count for OvR.
std::uint32_t model_count(std::uint32_t class_count);

/// Encrypt a dataset under the public key. Labels are skipped when
/// with_labels is false (inference data).
std::vector<EncryptedBatch> pack_batch(const data::EmbeddingDataset& ds, const PackingLayout& layout,
                                       ckks::Encryptor& enc, std::size_t target_level = 3, bool with_labels = true);

/// Decrypt and split back into rows of length dim.
std::vector<std::vector<double>> unpack(const ckks::CkksContext& ctx, const Ciphertext& ct,
                                        const PackingLayout& layout, const ckks::SecretKey& sk, std::size_t rows);

/// post_scale * (w . x_i) replicated over block i. Consumes two levels.
Ciphertext encrypted_dot(const ckks::Evaluator& ev, const Ciphertext& data, const Ciphertext& weights,
                         const PackingLayout& layout, double post_scale = 1.0);

enum class RefreshStrategy { None, Bootstrap, Debug };
std::string to_string(RefreshStrategy s);
RefreshStrategy refresh_from_string(const std::string& s);

/// Level refresh with the chosen strategy. Debug needs the secret key and an
/// explicit opt-in; bootstrap needs only evaluation keys.
class Refresher {
 public:
  static Refresher none();
  static Refresher bootstrap(const boot::BootstrapContext& bc);
  static Refresher debug(ckks::CkksContextPtr ctx, const ckks::SecretKey& sk, const ckks::PublicKey& pk,
                         bool insecure_enabled, std::uint64_t seed);

  RefreshStrategy strategy() const { return strategy_; }
  bool insecure() const { return strategy_ == RefreshStrategy::Debug; }
  /// Level a refreshed ciphertext comes back at.
  std::size_t output_level(const ckks::CkksContext& ctx) const;
  /// `tag` feeds the debug re-encryption seed so parallel calls stay
  /// reproducible.
  Ciphertext operator()(const ckks::Evaluator& ev, const Ciphertext& ct, std::uint64_t tag) const;

 private:
  RefreshStrategy strategy_ = RefreshStrategy::None;
  const boot::BootstrapContext* bc_ = nullptr;
  ckks::CkksContextPtr ctx_;
  const ckks::SecretKey* sk_ = nullptr;
  const ckks::PublicKey* pk_ = nullptr;
  bool enabled_ = false;
  std::uint64_t seed_ = 0;
};

struct TrainConfig {
  double learning_rate = 1.0;
  double momentum_gamma = 0.9;
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  std::uint64_t rng_seed = 0;

  void validate(const PackingLayout& layout) const;
};

/// Weight and Nesterov buffer (stored pre-multiplied by the learning rate).
struct ClassModel {
  Ciphertext w, u;
};

struct EncryptedModel {
  std::uint32_t class_count = 2;
  PackingLayout layout;
  bool insecure_provenance = false;
  std::vector<ClassModel> models;
};

struct TimingRow {
  std::size_t epoch = 0;
  double seconds = 0;
  std::size_t refreshes = 0;
};

/// Levels a refreshed logit needs for sigmoid, label subtraction, the data
/// product and the learning-rate product.
std::size_t refreshed_level_needed(const minimax::MinimaxPoly& sigmoid);

/// Input scale folded into the dot-product mask so the logit lands on [-1,1].
double logit_prescale(const minimax::MinimaxPoly& sigmoid);

/// Optional progress hook: (class, epoch, iteration).
using ProgressFn = std::function<void(std::uint32_t, std::size_t, std::size_t)>;

struct TrainResult {
  EncryptedModel model;
  std::vector<TimingRow> timing;
};

/// Encrypted mini-batch SGD with Nesterov momentum, one-vs-rest for more
/// than two classes. Ciphertexts (rows_per_ct rows each) are shuffled per
/// epoch; a batch is batch_size / rows_per_ct consecutive ciphertexts.
TrainResult train(const ckks::Evaluator& ev, const std::vector<EncryptedBatch>& batches, std::uint32_t class_count,
                  const PackingLayout& layout, const TrainConfig& config, const minimax::MinimaxPoly& sigmoid,
                  const Refresher& refresher, const ProgressFn& progress = {});

/// Per model: sigmoid(w . x) replicated over each row's block.
std::vector<std::vector<Ciphertext>> predict(const ckks::Evaluator& ev, const EncryptedModel& model,
                                             const std::vector<EncryptedBatch>& batches,
                                             const minimax::MinimaxPoly& sigmoid, const Refresher& refresher);

/// Client side: decrypt scores into rows x model_count.
std::vector<double> decrypt_scores(const ckks::CkksContext& ctx, const std::vector<std::vector<Ciphertext>>& scores,
                                   const std::vector<EncryptedBatch>& batches, const PackingLayout& layout,
                                   const ckks::SecretKey& sk);
/// Same, from score ciphertexts and per-ciphertext row counts.
std::vector<double> decrypt_scores(const ckks::CkksContext& ctx, const std::vector<std::vector<Ciphertext>>& scores,
                                   const std::vector<std::uint32_t>& rows_per_batch, const PackingLayout& layout,
                                   const ckks::SecretKey& sk);

/// Decrypted weights (first dim entries plus bias), per model.
std::vector<std::vector<double>> decrypt_weights(const ckks::CkksContext& ctx, const EncryptedModel& model,
                                                 const ckks::SecretKey& sk);

/// F1-maximising threshold over midpoints of sorted unique scores (and 0.5);
/// ties go to the candidate nearest 0.5.
double tune_threshold(std::span<const double> scores, std::span<const std::uint8_t> positive);

// ---- plaintext shadow of the encrypted trainer ----

struct ShadowModel {
  std::vector<std::vector<double>> w, u;  // per model, padded_dim entries
  double max_abs_logit = 0;
  std::size_t domain_breaches = 0;
  std::vector<double> epoch_loss;  // mean polynomial-sigmoid loss per epoch, model 0
};

/// Same packing, order, polynomial and update rule as train().
ShadowModel shadow_train(const data::EmbeddingDataset& ds, const PackingLayout& layout, const TrainConfig& config,
                         const minimax::MinimaxPoly& sigmoid);

/// (1/B) sum_i (p(w.x_i) - y_i) x_i over the given rows, padded layout.
std::vector<double> shadow_gradient(const data::EmbeddingDataset& ds, const std::vector<std::size_t>& rows,
                                    const std::vector<double>& w, const PackingLayout& layout,
                                    const minimax::MinimaxPoly& sigmoid, std::uint16_t positive_class = 1);

/// Plaintext scores with the polynomial sigmoid, rows x model_count.
std::vector<double> shadow_predict(const ShadowModel& m, const data::EmbeddingDataset& ds, const PackingLayout& layout,
                                   const minimax::MinimaxPoly& sigmoid);

// ---- files ----

/// HLR1: magic, u16 version, u32 class count, u32 dim/padded/rows/slots,
/// u8 provenance, u32 model count, then (w, u) ciphertext blobs.
std::vector<std::uint8_t> serialize_model(const ckks::CkksContext& ctx, const EncryptedModel& m);
EncryptedModel deserialize_model(const ckks::CkksContext& ctx, std::span<const std::uint8_t> bytes);

/// Client-to-server handoff of an encrypted split.
struct EncryptedDataset {
  std::uint32_t class_count = 2;
  PackingLayout layout;
  std::vector<EncryptedBatch> batches;
};
/// HCT1: magic, u16 version, u32 class count, layout, u32 batch count, then per
/// batch u32 rows, u32 label count, data and label ciphertext blobs.
std::vector<std::uint8_t> serialize_dataset(const ckks::CkksContext& ctx, const EncryptedDataset& d);
EncryptedDataset deserialize_dataset(const ckks::CkksContext& ctx, std::span<const std::uint8_t> bytes);

/// Server-to-client handoff of encrypted predictions.
struct EncryptedScores {
  std::uint32_t class_count = 2;
  PackingLayout layout;
  std::vector<std::uint32_t> rows_per_batch;
  std::vector<std::vector<Ciphertext>> scores;  // per model, per batch
};
/// HSC1: magic, u16 version, u32 class count, layout, u32 batch count, u32 rows
/// per batch, u32 model count, then ciphertext blobs model-major.
std::vector<std::uint8_t> serialize_scores(const ckks::CkksContext& ctx, const EncryptedScores& s);
EncryptedScores deserialize_scores(const ckks::CkksContext& ctx, std::span<const std::uint8_t> bytes);

std::string timing_csv(const std::vector<TimingRow>& rows);

}  // namespace hebert::logreg
