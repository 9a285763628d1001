#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hebert/ring/modarith.hpp"
#include "hebert/ring/ring_params.hpp"

namespace hebert::ring {

/// Precomputed negacyclic NTT tables for one prime.
///
/// The forward transform is an in-place Cooley-Tukey pass over bit-reversed
/// powers of a primitive 2N-th root psi; output slot k holds the evaluation
/// at psi^(2*bitrev(k)+1).
class NttTables {
 public:
  NttTables(const Modulus& q, std::size_t n);

  void forward(std::span<std::uint64_t> a) const;
  void inverse(std::span<std::uint64_t> a) const;

  const Modulus& modulus() const { return q_; }
  std::uint64_t root() const { return psi_; }
  std::size_t size() const { return n_; }

 private:
  Modulus q_;
  std::size_t n_;
  std::uint64_t psi_;
  std::vector<std::uint64_t> fwd_, fwd_shoup_;
  std::vector<std::uint64_t> inv_, inv_shoup_;
  std::uint64_t n_inv_, n_inv_shoup_;
};

/// Immutable ring description shared by every RnsPoly built on it. Moduli are
/// addressed by a single index space: chain primes 0..L, then special primes
/// L+1..L+k.
class RingContext {
 public:
  explicit RingContext(RingParams params);

  const RingParams& params() const { return params_; }
  std::size_t degree() const { return params_.ring_degree; }
  int log_degree() const { return log_n_; }
  std::size_t max_level() const { return params_.moduli_chain.size() - 1; }
  std::size_t chain_size() const { return params_.moduli_chain.size(); }
  std::size_t special_count() const { return params_.special_moduli.size(); }
  std::size_t modulus_count() const { return moduli_.size(); }

  const Modulus& modulus(std::size_t idx) const { return moduli_[idx]; }
  const NttTables& ntt(std::size_t idx) const { return ntt_[idx]; }
  bool is_special(std::size_t idx) const { return idx >= chain_size(); }

  /// Index set {0..level}.
  std::vector<std::uint32_t> chain_indices(std::size_t level) const;
  /// Index set {0..level} followed by every special prime.
  std::vector<std::uint32_t> extended_indices(std::size_t level) const;
  std::vector<std::uint32_t> special_indices() const;

  /// bitrev table over log2(N) bits.
  const std::vector<std::uint32_t>& bit_reverse() const { return bitrev_; }

 private:
  RingParams params_;
  int log_n_ = 0;
  std::vector<Modulus> moduli_;
  std::vector<NttTables> ntt_;
  std::vector<std::uint32_t> bitrev_;
};

using RingContextPtr = std::shared_ptr<const RingContext>;

std::uint32_t reverse_bits(std::uint32_t x, int bits);

}  // namespace hebert::ring
