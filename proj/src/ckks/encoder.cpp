#include "hebert/ckks/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "hebert/common/error.hpp"

namespace hebert::ckks {

namespace {
constexpr const char* kModule = "ckks-core";

void bit_reverse(std::span<cplx> v) {
  const std::size_t n = v.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(v[i], v[j]);
  }
}

std::uint64_t residue(long double c, const ring::Modulus& q) {
  const bool neg = c < 0;
  if (neg) c = -c;
  std::uint64_t r;
  if (c < 0x1p62L) {
    r = q.reduce(static_cast<std::uint64_t>(c));
  } else {
    const long double hi = std::floor(c / 0x1p62L);
    const long double lo = c - hi * 0x1p62L;
    const std::uint64_t two62 = q.reduce(std::uint64_t{1} << 62);
    r = q.add(q.mul(q.reduce(static_cast<std::uint64_t>(hi)), two62), q.reduce(static_cast<std::uint64_t>(lo)));
  }
  return neg ? q.neg(r) : r;
}

Plaintext encode_coeffs(const CkksContext& ctx, std::span<const cplx> slots, std::size_t level, double scale) {
  const std::size_t n = ctx.slot_count();
  require(level <= ctx.max_level(), kModule, ErrorCode::LevelMismatch, "encode level above max_level");
  require(scale > 0 && std::isfinite(scale), kModule, ErrorCode::InvalidArgument, "scale must be positive");
  require(std::log2(scale) < ctx.modulus_bits(level) - 1, kModule, ErrorCode::Precision,
          "scale is not below the modulus at this level");

  std::vector<cplx> u(n, 0.0);
  std::copy(slots.begin(), slots.end(), u.begin());
  special_ifft(ctx, u);

  ring::RnsPoly poly(ctx.ring(), ctx.ring()->chain_indices(level), ring::PolyForm::Coefficient);
  const long double bound = std::exp2(static_cast<long double>(std::min(ctx.modulus_bits(level) - 1, 123.0)));
  const long double s = scale;
  for (std::size_t i = 0; i < n; ++i) {
    const long double re = std::round(static_cast<long double>(u[i].real()) * s);
    const long double im = std::round(static_cast<long double>(u[i].imag()) * s);
    if (!(std::abs(re) < bound && std::abs(im) < bound))
      fail(kModule, ErrorCode::Precision, "value * scale overflows the modulus");
    set_coefficient(poly, i, re);
    set_coefficient(poly, i + n, im);
  }
  poly.ntt_inplace();
  return {std::move(poly), scale};
}

}  // namespace

void set_coefficient(ring::RnsPoly& p, std::size_t index, long double c) {
  for (std::size_t l = 0; l < p.limb_count(); ++l) p.limb(l)[index] = residue(c, p.modulus(l));
}

void special_fft(const CkksContext& ctx, std::span<cplx> vals) {
  const std::size_t size = vals.size();
  const std::size_t m = 2 * ctx.degree();
  const auto& rg = ctx.rot_group();
  const auto& ksi = ctx.ksi();
  bit_reverse(vals);
  for (std::size_t len = 2; len <= size; len <<= 1) {
    const std::size_t lenh = len >> 1, lenq = len << 2, gap = m / lenq;
    for (std::size_t i = 0; i < size; i += len)
      for (std::size_t j = 0; j < lenh; ++j) {
        const std::size_t idx = (rg[j] % lenq) * gap;
        const cplx u = vals[i + j];
        const cplx v = vals[i + j + lenh] * ksi[idx];
        vals[i + j] = u + v;
        vals[i + j + lenh] = u - v;
      }
  }
}

void special_ifft(const CkksContext& ctx, std::span<cplx> vals) {
  const std::size_t size = vals.size();
  const std::size_t m = 2 * ctx.degree();
  const auto& rg = ctx.rot_group();
  const auto& ksi = ctx.ksi();
  for (std::size_t len = size; len >= 2; len >>= 1) {
    const std::size_t lenh = len >> 1, lenq = len << 2, gap = m / lenq;
    for (std::size_t i = 0; i < size; i += len)
      for (std::size_t j = 0; j < lenh; ++j) {
        const std::size_t idx = (lenq - (rg[j] % lenq)) * gap;
        const cplx u = vals[i + j] + vals[i + j + lenh];
        const cplx v = (vals[i + j] - vals[i + j + lenh]) * ksi[idx];
        vals[i + j] = u;
        vals[i + j + lenh] = v;
      }
  }
  bit_reverse(vals);
  const double inv = 1.0 / static_cast<double>(size);
  for (auto& v : vals) v *= inv;
}

Plaintext encode(const CkksContext& ctx, std::span<const cplx> values, std::size_t level, double scale) {
  require(values.size() <= ctx.slot_count(), kModule, ErrorCode::InvalidArgument, "more values than slots");
  for (const auto& v : values)
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), kModule, ErrorCode::NonFinite,
            "non-finite value in encode");
  return encode_coeffs(ctx, values, level, scale);
}

Plaintext encode(const CkksContext& ctx, std::span<const double> values, std::size_t level, double scale) {
  std::vector<cplx> c(values.begin(), values.end());
  return encode(ctx, c, level, scale);
}

Plaintext encode_constant(const CkksContext& ctx, cplx value, std::size_t level, double scale) {
  require(level <= ctx.max_level(), kModule, ErrorCode::LevelMismatch, "encode level above max_level");
  ring::RnsPoly poly(ctx.ring(), ctx.ring()->chain_indices(level), ring::PolyForm::Coefficient);
  set_coefficient(poly, 0, std::round(static_cast<long double>(value.real()) * scale));
  set_coefficient(poly, ctx.slot_count(), std::round(static_cast<long double>(value.imag()) * scale));
  poly.ntt_inplace();
  return {std::move(poly), scale};
}

std::vector<long double> centered_coefficients(const CkksContext& ctx, const ring::RnsPoly& p) {
  require(p.form() == ring::PolyForm::Coefficient, kModule, ErrorCode::FormMismatch, "need coefficient form");
  const std::size_t limbs = p.limb_count();
  const std::size_t n = p.degree();
  std::vector<long double> out(n);
  std::vector<std::uint64_t> d(limbs);
  for (std::size_t k = 0; k < n; ++k) {
    // Garner mixed-radix digits
    for (std::size_t i = 0; i < limbs; ++i) {
      const auto& q = p.modulus(i);
      std::uint64_t t = p.limb(i)[k];
      for (std::size_t j = 0; j < i; ++j) t = q.mul(q.sub(t, q.reduce(d[j])), ctx.garner_inv(p.modulus_index(i), p.modulus_index(j)));
      d[i] = t;
    }
    const std::uint64_t top_q = p.modulus(limbs - 1).value();
    const bool negative = d[limbs - 1] > (top_q - 1) / 2;
    long double acc = 0;
    for (std::size_t i = limbs; i-- > 0;) {
      const std::uint64_t qi = p.modulus(i).value();
      const std::uint64_t digit = negative ? qi - 1 - d[i] : d[i];
      acc = acc * static_cast<long double>(qi) + static_cast<long double>(digit);
    }
    out[k] = negative ? -(acc + 1) : acc;
  }
  return out;
}

std::vector<cplx> decode(const CkksContext& ctx, const Plaintext& pt) {
  ring::RnsPoly c = pt.poly;
  if (c.form() == ring::PolyForm::Evaluation) c.intt_inplace();
  const auto coeffs = centered_coefficients(ctx, c);
  const std::size_t n = ctx.slot_count();
  const long double s = pt.scale;
  std::vector<cplx> vals(n);
  for (std::size_t i = 0; i < n; ++i)
    vals[i] = {static_cast<double>(coeffs[i] / s), static_cast<double>(coeffs[i + n] / s)};
  special_fft(ctx, vals);
  return vals;
}

std::vector<double> decode_real(const CkksContext& ctx, const Plaintext& pt) {
  const auto v = decode(ctx, pt);
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](const cplx& c) { return c.real(); });
  return out;
}

}  // namespace hebert::ckks
