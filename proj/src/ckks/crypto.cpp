#include "hebert/ckks/crypto.hpp"

#include "hebert/common/error.hpp"

namespace hebert::ckks {

using ring::PolyForm;
using ring::RnsPoly;

namespace {
constexpr const char* kModule = "ckks-core";
}

Encryptor::Encryptor(CkksContextPtr ctx, PublicKey pk, std::optional<std::uint64_t> seed)
    : ctx_(std::move(ctx)), pk_(std::move(pk)), rng_(seed ? *seed : ring::entropy_seed()) {}

Ciphertext Encryptor::encrypt(const Plaintext& pt, std::optional<std::size_t> target_level) {
  const std::size_t level = target_level.value_or(pt.level());
  require(level <= pt.level(), kModule, ErrorCode::LevelMismatch,
          "target level above the plaintext level; re-encode at the target level");
  const auto& rc = ctx_->ring();
  const auto idx = rc->chain_indices(level);
  const double sigma = ctx_->params().error_sigma;

  RnsPoly v = ring::sample_poly(rc, idx, {ring::SampleKind::Ternary}, rng_);
  v.ntt_inplace();
  RnsPoly e0 = ring::sample_poly(rc, idx, {ring::SampleKind::DiscreteGaussian, sigma}, rng_);
  RnsPoly e1 = ring::sample_poly(rc, idx, {ring::SampleKind::DiscreteGaussian, sigma}, rng_);
  e0.ntt_inplace();
  e1.ntt_inplace();

  Ciphertext ct;
  ct.c0 = ring::poly_mul(v, pk_.b.restricted(idx));
  ct.c0.add_inplace(e0);
  ct.c0.add_inplace(pt.poly.restricted(idx));
  ct.c1 = ring::poly_mul(v, pk_.a.restricted(idx));
  ct.c1.add_inplace(e1);
  ct.scale = pt.scale;
  ct.slot_count = ctx_->slot_count();
  return ct;
}

Ciphertext Encryptor::encrypt_values(std::span<const double> values, std::size_t level) {
  return encrypt(encode(*ctx_, values, level, ctx_->scale_at(level)));
}

Ciphertext Encryptor::encrypt_values(std::span<const cplx> values, std::size_t level) {
  return encrypt(encode(*ctx_, values, level, ctx_->scale_at(level)));
}

Ciphertext encrypt_symmetric(const CkksContext& ctx, const Plaintext& pt, const SecretKey& sk, ring::Rng& rng) {
  const auto& rc = ctx.ring();
  const auto idx = rc->chain_indices(pt.level());
  Ciphertext ct;
  ct.c1 = ring::sample_poly(rc, idx, {ring::SampleKind::Uniform}, rng);
  RnsPoly e = ring::sample_poly(rc, idx, {ring::SampleKind::DiscreteGaussian, ctx.params().error_sigma}, rng);
  e.ntt_inplace();
  ct.c0 = ring::poly_mul(ct.c1, sk.s.restricted(idx));
  ct.c0.negate_inplace();
  ct.c0.add_inplace(e);
  ct.c0.add_inplace(pt.poly);
  ct.scale = pt.scale;
  ct.slot_count = ctx.slot_count();
  return ct;
}

Plaintext decrypt(const CkksContext& ctx, const Ciphertext& ct, const SecretKey& sk) {
  require(ct.c0.form() == PolyForm::Evaluation, kModule, ErrorCode::FormMismatch, "ciphertext not in NTT form");
  RnsPoly m = ring::poly_mul(ct.c1, sk.s.restricted(ct.c1.moduli()));
  m.add_inplace(ct.c0);
  (void)ctx;
  return {std::move(m), ct.scale};
}

std::vector<double> decrypt_real(const CkksContext& ctx, const Ciphertext& ct, const SecretKey& sk) {
  return decode_real(ctx, decrypt(ctx, ct, sk));
}

std::vector<cplx> decrypt_complex(const CkksContext& ctx, const Ciphertext& ct, const SecretKey& sk) {
  return decode(ctx, decrypt(ctx, ct, sk));
}

}  // namespace hebert::ckks
