#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hebert/ring/ring_context.hpp"

namespace hebert::ring {

enum class PolyForm : std::uint8_t { Coefficient = 0, Evaluation = 1 };
enum class NttDirection { Forward, Inverse };

/// A ring element in double-CRT form: one length-N residue vector per active
/// prime. Limbs are independent; nothing here reconstructs big integers.
class RnsPoly {
 public:
  RnsPoly() = default;
  /// Zero polynomial over the given prime indices.
  RnsPoly(RingContextPtr ctx, std::vector<std::uint32_t> moduli, PolyForm form);

  static RnsPoly zero(RingContextPtr ctx, std::size_t level, PolyForm form);

  const RingContextPtr& context() const { return ctx_; }
  std::size_t degree() const { return ctx_ ? ctx_->degree() : 0; }
  std::size_t limb_count() const { return moduli_.size(); }
  /// Index of the highest active chain prime; special limbs do not count.
  std::size_t level() const;
  bool has_special() const;
  PolyForm form() const { return form_; }
  void set_form(PolyForm f) { form_ = f; }
  const std::vector<std::uint32_t>& moduli() const { return moduli_; }
  std::uint32_t modulus_index(std::size_t limb) const { return moduli_[limb]; }
  const Modulus& modulus(std::size_t limb) const { return ctx_->modulus(moduli_[limb]); }

  std::span<std::uint64_t> limb(std::size_t i) { return {data_.data() + i * degree(), degree()}; }
  std::span<const std::uint64_t> limb(std::size_t i) const { return {data_.data() + i * degree(), degree()}; }
  std::span<const std::uint64_t> raw() const { return data_; }
  std::span<std::uint64_t> raw() { return data_; }

  void ntt_inplace();
  void intt_inplace();

  void add_inplace(const RnsPoly& o);
  void sub_inplace(const RnsPoly& o);
  void negate_inplace();
  /// Slot-wise product; both operands in evaluation form.
  void mul_inplace(const RnsPoly& o);
  /// this += a * b (evaluation form).
  void fma_inplace(const RnsPoly& a, const RnsPoly& b);
  /// Multiply limb i by scalars[i] (already reduced mod that limb's prime).
  void mul_scalar_inplace(std::span<const std::uint64_t> scalars);
  void mul_scalar_inplace(std::uint64_t s);

  /// Drop every chain limb above `level` (and any special limbs).
  void drop_to_level(std::size_t level);
  /// Copy restricted to the given prime indices (must be a subset).
  RnsPoly restricted(const std::vector<std::uint32_t>& moduli) const;

  /// Apply X -> X^g (g odd, mod 2N). Works in either form.
  RnsPoly automorphism(std::uint64_t galois) const;

  friend bool operator==(const RnsPoly& a, const RnsPoly& b) {
    return a.moduli_ == b.moduli_ && a.form_ == b.form_ && a.data_ == b.data_;
  }

 private:
  void check_compatible(const RnsPoly& o, const char* what) const;

  RingContextPtr ctx_;
  std::vector<std::uint32_t> moduli_;
  std::vector<std::uint64_t> data_;
  PolyForm form_ = PolyForm::Coefficient;
};

/// Returns a transformed copy. Forward requires coefficient form, inverse
/// requires evaluation form; anything else raises FormMismatch.
RnsPoly ntt_transform(const RnsPoly& p, NttDirection direction);

/// Slot-wise product of two evaluation-form polynomials at the same level.
RnsPoly poly_mul(const RnsPoly& a, const RnsPoly& b);
RnsPoly poly_add(const RnsPoly& a, const RnsPoly& b);
RnsPoly poly_sub(const RnsPoly& a, const RnsPoly& b);

/// Build a coefficient-form polynomial from small signed coefficients.
RnsPoly from_signed(RingContextPtr ctx, const std::vector<std::uint32_t>& moduli, std::span<const std::int64_t> coeffs);

/// Index permutation realising X -> X^g on evaluation-form limbs.
std::vector<std::uint32_t> galois_permutation(std::size_t n, std::uint64_t galois);

}  // namespace hebert::ring
