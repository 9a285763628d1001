#pragma once

#include <cstdint>

namespace hebert::ring {

using u128 = unsigned __int128;

inline std::uint64_t mulhi64(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::uint64_t>((static_cast<u128>(a) * b) >> 64);
}

/// A word-sized prime modulus q < 2^62 with Barrett constants.
///
/// All inputs to add/sub/mul are expected reduced to [0, q). reduce128
/// accepts any product of two reduced values.
class Modulus {
 public:
  Modulus() = default;
  explicit Modulus(std::uint64_t q);

  std::uint64_t value() const { return q_; }
  int bit_count() const;

  std::uint64_t reduce(std::uint64_t x) const { return x >= q_ ? x % q_ : x; }

  std::uint64_t reduce128(u128 x) const {
    const auto x0 = static_cast<std::uint64_t>(x);
    const auto x1 = static_cast<std::uint64_t>(x >> 64);
    const u128 a = static_cast<u128>(x0) * ratio_lo_;
    const u128 b = static_cast<u128>(x0) * ratio_hi_;
    const u128 c = static_cast<u128>(x1) * ratio_lo_;
    const u128 mid = b + static_cast<std::uint64_t>(a >> 64);
    const u128 mid2 = mid + c;
    const std::uint64_t qhat =
        static_cast<std::uint64_t>(x1 * ratio_hi_) + static_cast<std::uint64_t>(mid2 >> 64);
    std::uint64_t r = x0 - qhat * q_;
    while (r >= q_) r -= q_;
    return r;
  }

  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const { return reduce128(static_cast<u128>(a) * b); }

  std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    const std::uint64_t s = a + b;
    return s >= q_ ? s - q_ : s;
  }

  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return a >= b ? a - b : a + q_ - b; }

  std::uint64_t neg(std::uint64_t a) const { return a == 0 ? 0 : q_ - a; }

  std::uint64_t pow(std::uint64_t base, std::uint64_t exp) const;

  /// Inverse via Fermat; q is prime.
  std::uint64_t inv(std::uint64_t a) const;

  std::uint64_t from_signed(std::int64_t v) const {
    if (v >= 0) return reduce(static_cast<std::uint64_t>(v));
    const std::uint64_t m = reduce(static_cast<std::uint64_t>(-(v + 1)) + 1);
    return neg(m);
  }

  /// Centered lift to (-q/2, q/2].
  std::int64_t to_signed(std::uint64_t a) const {
    return a > (q_ >> 1) ? -static_cast<std::int64_t>(q_ - a) : static_cast<std::int64_t>(a);
  }

  /// Shoup precomputation floor(w * 2^64 / q) for a fixed multiplicand w.
  std::uint64_t shoup(std::uint64_t w) const {
    return static_cast<std::uint64_t>((static_cast<u128>(w) << 64) / q_);
  }

  /// x * w mod q for precomputed w_shoup; x may be any 64-bit value.
  std::uint64_t mul_shoup(std::uint64_t x, std::uint64_t w, std::uint64_t w_shoup) const {
    std::uint64_t r = mul_shoup_lazy(x, w, w_shoup);
    return r >= q_ ? r - q_ : r;
  }

  /// Result in [0, 2q).
  std::uint64_t mul_shoup_lazy(std::uint64_t x, std::uint64_t w, std::uint64_t w_shoup) const {
    const std::uint64_t qh = mulhi64(x, w_shoup);
    return x * w - qh * q_;
  }

  friend bool operator==(const Modulus& a, const Modulus& b) { return a.q_ == b.q_; }

 private:
  std::uint64_t q_ = 0;
  std::uint64_t ratio_lo_ = 0;  // floor(2^128 / q), low word
  std::uint64_t ratio_hi_ = 0;
};

bool is_prime(std::uint64_t n);

}  // namespace hebert::ring
