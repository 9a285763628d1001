#include "hebert/ring/modarith.hpp"

#include <bit>

#include "hebert/common/error.hpp"

namespace hebert::ring {

Modulus::Modulus(std::uint64_t q) : q_(q) {
  require(q >= 2 && q < (std::uint64_t{1} << 62), "ring-arith", ErrorCode::InvalidArgument,
          "modulus must lie in [2, 2^62)");
  // floor(2^128 / q) = floor((2^128 - 1) / q) unless q divides 2^128, which
  // only happens for powers of two.
  const u128 all = ~u128{0};
  u128 r = all / q;
  if (std::has_single_bit(q)) r += 1;
  ratio_lo_ = static_cast<std::uint64_t>(r);
  ratio_hi_ = static_cast<std::uint64_t>(r >> 64);
}

int Modulus::bit_count() const { return 64 - std::countl_zero(q_); }

std::uint64_t Modulus::pow(std::uint64_t base, std::uint64_t exp) const {
  std::uint64_t result = 1 % q_;
  base = reduce(base);
  while (exp) {
    if (exp & 1) result = mul(result, base);
    base = mul(base, base);
    exp >>= 1;
  }
  return result;
}

std::uint64_t Modulus::inv(std::uint64_t a) const {
  a = reduce(a);
  require(a != 0, "ring-arith", ErrorCode::InvalidArgument, "zero has no inverse");
  return pow(a, q_ - 2);
}

namespace {

std::uint64_t mulmod_raw(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<u128>(a) * b % m);
}

std::uint64_t powmod_raw(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod_raw(r, a, m);
    a = mulmod_raw(a, a, m);
    e >>= 1;
  }
  return r;
}

}  // namespace

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // This base set is deterministic for all n < 3.3e24.
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    std::uint64_t x = powmod_raw(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod_raw(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

}  // namespace hebert::ring
