#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hebert::ring {

/// Ring Z_Q[X]/(X^N + 1) with an RNS modulus chain and the extra primes used
/// for hybrid key switching.
struct RingParams {
  std::string name;
  std::size_t ring_degree = 0;
  std::vector<std::uint64_t> moduli_chain;    // q_0 .. q_L
  std::vector<std::uint64_t> special_moduli;  // p_0 .. p_{k-1}

  /// Throws InvalidArgument on any violated invariant.
  void validate() const;

  std::size_t max_level() const { return moduli_chain.size() - 1; }

  /// Total bit length of prod(q_i) (and of prod(p_j) when requested).
  double chain_bits(bool include_special = false) const;

  /// Versioned text form: one "key value..." line per field, moduli in hex.
  std::string to_text() const;
  static RingParams from_text(const std::string& text);

  friend bool operator==(const RingParams&, const RingParams&) = default;
};

/// Largest `count` primes strictly below 2^bits with p = 1 mod 2N, searched
/// downward, skipping anything in `exclude`.
std::vector<std::uint64_t> primes_below(int bits, std::size_t ring_degree, std::size_t count,
                                        const std::vector<std::uint64_t>& exclude = {});

/// Prime p = 1 mod 2N closest to `target` (ties favour the smaller prime).
std::uint64_t prime_nearest(double target, std::size_t ring_degree, const std::vector<std::uint64_t>& exclude);

}  // namespace hebert::ring
