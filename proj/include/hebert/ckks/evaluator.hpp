#pragma once

#include <span>
#include <utility>

#include "hebert/ckks/ciphertext.hpp"
#include "hebert/ckks/encoder.hpp"
#include "hebert/ckks/keys.hpp"

namespace hebert::ckks {

/// Homomorphic operations. Stateless apart from the shared context and a
/// borrowed key bundle, so one instance may serve many threads.
///
/// Scale policy: every ciphertext product is rescaled immediately. Constant
/// and plaintext products choose their encoding scale so the output lands on
/// a requested scale (by default the canonical scale of the output level).
class Evaluator {
 public:
  Evaluator(CkksContextPtr ctx, const EvalKeys* keys);

  const CkksContextPtr& context() const { return ctx_; }
  const EvalKeys* keys() const { return keys_; }

  Ciphertext add(const Ciphertext& a, const Ciphertext& b) const;
  Ciphertext sub(const Ciphertext& a, const Ciphertext& b) const;
  void add_inplace(Ciphertext& a, const Ciphertext& b) const;
  void sub_inplace(Ciphertext& a, const Ciphertext& b) const;
  Ciphertext negate(const Ciphertext& a) const;
  Ciphertext add_plain(const Ciphertext& a, const Plaintext& p) const;
  /// Adds c to every slot.
  Ciphertext add_const(const Ciphertext& a, cplx c) const;

  /// Product with relinearisation and rescale.
  Ciphertext mult(const Ciphertext& a, const Ciphertext& b) const;
  Ciphertext square(const Ciphertext& a) const;
  /// Product with a plaintext followed by rescale.
  Ciphertext mult_plain(const Ciphertext& a, const Plaintext& p) const;
  /// Product with a plaintext, no rescale; scale multiplies.
  Ciphertext mult_plain_noscale(const Ciphertext& a, const Plaintext& p) const;
  /// Slot-wise product with `values`, landing on `out_scale` one level down
  /// (canonical scale when out_scale <= 0).
  Ciphertext mult_values(const Ciphertext& a, std::span<const cplx> values, double out_scale = 0) const;
  Ciphertext mult_values(const Ciphertext& a, std::span<const double> values, double out_scale = 0) const;
  /// c * a at exactly (out_level, out_scale); needs a.level() > out_level.
  Ciphertext mult_const(const Ciphertext& a, double c, std::size_t out_level, double out_scale) const;
  /// c * a one level down at the canonical scale.
  Ciphertext mult_const(const Ciphertext& a, double c) const;
  /// c * a without rescale; the constant is encoded at const_scale.
  Ciphertext mult_const_noscale(const Ciphertext& a, cplx c, double const_scale) const;
  Ciphertext mult_int(const Ciphertext& a, std::int64_t k) const;
  /// Multiply every slot by i (monomial X^(N/2), free).
  Ciphertext mult_by_i(const Ciphertext& a) const;

  Ciphertext rescale(const Ciphertext& a) const;
  /// Drops limbs; scale untouched.
  Ciphertext mod_down(const Ciphertext& a, std::size_t level) const;
  /// Move to `level` with the exact given scale (one constant product).
  Ciphertext adjust_to(const Ciphertext& a, std::size_t level, double scale) const;
  /// Canonical scale at `level`; a no-op when already there.
  Ciphertext to_level(const Ciphertext& a, std::size_t level) const;

  /// Cyclic left rotation. Falls back to a signed power-of-two decomposition
  /// when no key exists for the exact step.
  Ciphertext rotate(const Ciphertext& a, std::int64_t step) const;
  Ciphertext conjugate(const Ciphertext& a) const;
  Ciphertext apply_galois(const Ciphertext& a, std::uint64_t galois) const;
  bool can_rotate(std::int64_t step) const;

  /// Hybrid key switch of d (evaluation form, chain primes only).
  std::pair<ring::RnsPoly, ring::RnsPoly> key_switch(const ring::RnsPoly& d, const SwitchKey& key) const;

 private:
  std::vector<std::int64_t> rotation_plan(std::int64_t step) const;
  void align(Ciphertext& a, Ciphertext& b) const;

  CkksContextPtr ctx_;
  const EvalKeys* keys_;
};

/// Noiseless encryption of a plaintext (c1 = 0).
Ciphertext trivial_ciphertext(const CkksContext& ctx, const Plaintext& pt);

/// RNS basis conversion of a coefficient-form poly onto `targets`. The fast
/// form may be off by a small multiple of the source modulus; the exact form
/// yields the centred representative.
ring::RnsPoly basis_convert(const ring::RnsPoly& src, const std::vector<std::uint32_t>& targets,
                            bool exact_centered = false);

}  // namespace hebert::ckks
