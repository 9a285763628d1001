#include "hebert/ckks/keys.hpp"

#include "hebert/common/error.hpp"

namespace hebert::ckks {

using ring::PolyForm;
using ring::RnsPoly;

std::uint64_t galois_for_step(std::int64_t step, std::size_t ring_degree) {
  const auto slots = static_cast<std::int64_t>(ring_degree / 2);
  const std::uint64_t m = 2 * ring_degree;
  std::int64_t k = step % slots;
  if (k < 0) k += slots;
  std::uint64_t g = 1;
  for (std::int64_t i = 0; i < k; ++i) g = g * 5 % m;
  return g;
}

std::uint64_t galois_for_conjugation(std::size_t ring_degree) { return 2 * ring_degree - 1; }

std::vector<std::int64_t> power_of_two_steps(std::size_t slot_count) {
  std::vector<std::int64_t> steps;
  for (std::int64_t s = 1; s < static_cast<std::int64_t>(slot_count); s <<= 1) {
    steps.push_back(s);
    steps.push_back(-s);
  }
  return steps;
}

SwitchKey make_switch_key(const CkksContext& ctx, const SecretKey& sk, const RnsPoly& s_from, ring::Rng& rng) {
  const auto& rc = ctx.ring();
  const std::size_t top = ctx.max_level();
  const auto ext = rc->extended_indices(top);
  ring::SampleSpec err{ring::SampleKind::DiscreteGaussian, ctx.params().error_sigma};
  SwitchKey key;
  for (std::size_t j = 0; j < ctx.digit_count(top); ++j) {
    RnsPoly a = ring::sample_poly(rc, ext, {ring::SampleKind::Uniform}, rng);
    RnsPoly e = ring::sample_poly(rc, ext, err, rng);
    e.ntt_inplace();
    RnsPoly b = ring::poly_mul(a, sk.s);
    b.negate_inplace();
    b.add_inplace(e);
    for (auto i : ctx.digit_indices(j, top)) {
      const auto& q = rc->modulus(i);
      const std::uint64_t pm = ctx.p_mod(i);
      auto dst = b.limb(i);
      auto src = s_from.limb(i);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = q.add(dst[k], q.mul(pm, src[k]));
    }
    key.b.push_back(std::move(b));
    key.a.push_back(std::move(a));
  }
  return key;
}

KeySet keygen(const CkksContextPtr& ctx, const KeygenOptions& opts, std::uint64_t seed) {
  const auto& rc = ctx->ring();
  const auto& p = ctx->params();
  const std::size_t top = ctx->max_level();
  ring::Rng rng(seed);

  ring::SampleSpec sdist{p.secret_dist == SecretDist::Sparse ? ring::SampleKind::SparseTernary
                                                               : ring::SampleKind::Ternary};
  sdist.hamming_weight = p.hamming_weight;
  KeySet ks;
  SecretKey sk{ring::sample_poly(rc, rc->extended_indices(top), sdist, rng)};
  sk.s.ntt_inplace();

  const auto chain = rc->chain_indices(top);
  PublicKey pk;
  pk.a = ring::sample_poly(rc, chain, {ring::SampleKind::Uniform}, rng);
  RnsPoly e = ring::sample_poly(rc, chain, {ring::SampleKind::DiscreteGaussian, p.error_sigma}, rng);
  e.ntt_inplace();
  pk.b = ring::poly_mul(pk.a, sk.s.restricted(chain));
  pk.b.negate_inplace();
  pk.b.add_inplace(e);
  ks.pub = std::move(pk);

  if (opts.relinearization) {
    RnsPoly s2 = ring::poly_mul(sk.s, sk.s);
    ks.eval.relin = make_switch_key(*ctx, sk, s2, rng);
  }
  ks.eval.rotation_steps = opts.rotation_steps;
  for (auto step : opts.rotation_steps) {
    const auto g = galois_for_step(step, ctx->degree());
    if (g == 1 || ks.eval.has_galois(g)) continue;
    ks.eval.galois.emplace(g, make_switch_key(*ctx, sk, sk.s.automorphism(g), rng));
  }
  if (opts.conjugation) {
    const auto g = galois_for_conjugation(ctx->degree());
    ks.eval.galois.emplace(g, make_switch_key(*ctx, sk, sk.s.automorphism(g), rng));
  }
  ks.secret = std::move(sk);
  return ks;
}

}  // namespace hebert::ckks
