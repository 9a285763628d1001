#include "hebert/ring/ring_context.hpp"

#include <bit>

#include "hebert/common/error.hpp"

namespace hebert::ring {

std::uint32_t reverse_bits(std::uint32_t x, int bits) {
  std::uint32_t r = 0;
  for (int i = 0; i < bits; ++i) {
    r = (r << 1) | (x & 1);
    x >>= 1;
  }
  return r;
}

namespace {

std::uint64_t find_primitive_root(const Modulus& q, std::size_t n) {
  const std::uint64_t two_n = 2 * n;
  const std::uint64_t cofactor = (q.value() - 1) / two_n;
  for (std::uint64_t x = 2;; ++x) {
    const std::uint64_t g = q.pow(x, cofactor);
    // g has order dividing 2N; it is primitive iff g^N = -1.
    if (q.pow(g, n) == q.value() - 1) return g;
  }
}

}  // namespace

NttTables::NttTables(const Modulus& q, std::size_t n) : q_(q), n_(n) {
  psi_ = find_primitive_root(q, n);
  const int logn = std::countr_zero(n);
  const std::uint64_t psi_inv = q.inv(psi_);
  fwd_.resize(n);
  inv_.resize(n);
  fwd_shoup_.resize(n);
  inv_shoup_.resize(n);
  std::uint64_t pw = 1, pw_inv = 1;
  std::vector<std::uint64_t> powers(n), powers_inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    powers[i] = pw;
    powers_inv[i] = pw_inv;
    pw = q.mul(pw, psi_);
    pw_inv = q.mul(pw_inv, psi_inv);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = reverse_bits(static_cast<std::uint32_t>(i), logn);
    fwd_[i] = powers[r];
    inv_[i] = powers_inv[r];
    fwd_shoup_[i] = q.shoup(fwd_[i]);
    inv_shoup_[i] = q.shoup(inv_[i]);
  }
  n_inv_ = q.inv(n);
  n_inv_shoup_ = q.shoup(n_inv_);
}

void NttTables::forward(std::span<std::uint64_t> a) const {
  const std::uint64_t q = q_.value();
  const std::uint64_t two_q = 2 * q;
  std::size_t t = n_;
  for (std::size_t m = 1; m < n_; m <<= 1) {
    t >>= 1;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j1 = 2 * i * t;
      const std::uint64_t w = fwd_[m + i];
      const std::uint64_t ws = fwd_shoup_[m + i];
      std::uint64_t* x = a.data() + j1;
      std::uint64_t* y = x + t;
      for (std::size_t j = 0; j < t; ++j) {
        std::uint64_t u = x[j];
        if (u >= two_q) u -= two_q;
        const std::uint64_t v = q_.mul_shoup_lazy(y[j], w, ws);
        x[j] = u + v;
        y[j] = u + two_q - v;
      }
    }
  }
  for (auto& v : a) {
    if (v >= two_q) v -= two_q;
    if (v >= q) v -= q;
  }
}

void NttTables::inverse(std::span<std::uint64_t> a) const {
  const std::uint64_t two_q = 2 * q_.value();
  std::size_t t = 1;
  for (std::size_t m = n_; m > 1; m >>= 1) {
    const std::size_t h = m >> 1;
    std::size_t j1 = 0;
    for (std::size_t i = 0; i < h; ++i) {
      const std::uint64_t w = inv_[h + i];
      const std::uint64_t ws = inv_shoup_[h + i];
      std::uint64_t* x = a.data() + j1;
      std::uint64_t* y = x + t;
      for (std::size_t j = 0; j < t; ++j) {
        const std::uint64_t u = x[j];
        const std::uint64_t v = y[j];
        std::uint64_t s = u + v;
        if (s >= two_q) s -= two_q;
        x[j] = s;
        y[j] = q_.mul_shoup_lazy(u + two_q - v, w, ws);
      }
      j1 += 2 * t;
    }
    t <<= 1;
  }
  for (auto& v : a) v = q_.mul_shoup(v, n_inv_, n_inv_shoup_);
}

RingContext::RingContext(RingParams params) : params_(std::move(params)) {
  params_.validate();
  log_n_ = std::countr_zero(params_.ring_degree);
  for (auto q : params_.moduli_chain) moduli_.emplace_back(q);
  for (auto p : params_.special_moduli) moduli_.emplace_back(p);
  ntt_.reserve(moduli_.size());
  for (const auto& m : moduli_) ntt_.emplace_back(m, params_.ring_degree);
  bitrev_.resize(params_.ring_degree);
  for (std::size_t i = 0; i < bitrev_.size(); ++i) bitrev_[i] = reverse_bits(static_cast<std::uint32_t>(i), log_n_);
}

std::vector<std::uint32_t> RingContext::chain_indices(std::size_t level) const {
  require(level <= max_level(), "ring-arith", ErrorCode::LevelMismatch, "level exceeds modulus chain");
  std::vector<std::uint32_t> idx(level + 1);
  for (std::size_t i = 0; i <= level; ++i) idx[i] = static_cast<std::uint32_t>(i);
  return idx;
}

std::vector<std::uint32_t> RingContext::extended_indices(std::size_t level) const {
  auto idx = chain_indices(level);
  for (std::size_t j = 0; j < special_count(); ++j) idx.push_back(static_cast<std::uint32_t>(chain_size() + j));
  return idx;
}

std::vector<std::uint32_t> RingContext::special_indices() const {
  std::vector<std::uint32_t> idx;
  for (std::size_t j = 0; j < special_count(); ++j) idx.push_back(static_cast<std::uint32_t>(chain_size() + j));
  return idx;
}

}  // namespace hebert::ring
