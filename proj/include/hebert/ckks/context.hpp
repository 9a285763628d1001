#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "hebert/ckks/params.hpp"
#include "hebert/ring/ring_context.hpp"

namespace hebert::ckks {

/// Immutable per-parameter-set state: ring tables, canonical scales, the
/// special-FFT twiddles and the hybrid key-switching layout.
class CkksContext {
 public:
  static std::shared_ptr<const CkksContext> create(CkksParams params);

  const CkksParams& params() const { return params_; }
  const ring::RingContextPtr& ring() const { return ring_; }
  const Digest& params_hash() const { return hash_; }
  std::size_t degree() const { return params_.ring.ring_degree; }
  std::size_t slot_count() const { return params_.slot_count; }
  std::size_t max_level() const { return params_.max_level; }

  double scale_at(std::size_t level) const { return scales_.at(level); }
  /// log2 of q_0 * ... * q_level.
  double modulus_bits(std::size_t level) const { return log_q_.at(level); }
  std::uint64_t prime(std::size_t chain_idx) const { return params_.ring.moduli_chain.at(chain_idx); }

  // hybrid key switching: digits of `alpha` consecutive chain primes
  std::size_t alpha() const { return params_.ring.special_moduli.size(); }
  std::size_t digit_count(std::size_t level) const { return (level + alpha()) / alpha(); }
  std::vector<std::uint32_t> digit_indices(std::size_t digit, std::size_t level) const;
  std::uint64_t p_mod(std::size_t chain_idx) const { return p_mod_q_[chain_idx]; }
  std::uint64_t p_inv_mod(std::size_t chain_idx) const { return p_inv_mod_q_[chain_idx]; }

  // special FFT tables
  const std::vector<std::uint64_t>& rot_group() const { return rot_group_; }
  const std::vector<std::complex<double>>& ksi() const { return ksi_; }

  /// Evaluation-form image of X^(N/2) modulo prime `idx`; multiplying by it
  /// multiplies every slot by i.
  std::span<const std::uint64_t> imag_unit_ntt(std::size_t idx) const {
    return {imag_unit_.data() + idx * degree(), degree()};
  }

  /// q_j^{-1} mod q_i for the Garner reconstruction.
  std::uint64_t garner_inv(std::size_t i, std::size_t j) const { return garner_inv_[i * params_.ring.moduli_chain.size() + j]; }

  explicit CkksContext(CkksParams params);

 private:
  CkksParams params_;
  ring::RingContextPtr ring_;
  Digest hash_{};
  std::vector<double> scales_;
  std::vector<double> log_q_;
  std::vector<std::uint64_t> p_mod_q_, p_inv_mod_q_;
  std::vector<std::uint64_t> rot_group_;
  std::vector<std::complex<double>> ksi_;
  std::vector<std::uint64_t> imag_unit_;
  std::vector<std::uint64_t> garner_inv_;
};

using CkksContextPtr = std::shared_ptr<const CkksContext>;

}  // namespace hebert::ckks
