#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hebert/common/sha256.hpp"
#include "hebert/ring/ring_params.hpp"

namespace hebert::ckks {

enum class SecretDist : std::uint8_t { Ternary = 0, Sparse = 1 };

struct CkksParams {
  ring::RingParams ring;
  double default_scale = 0x1p40;
  std::size_t max_level = 0;
  std::size_t slot_count = 0;
  std::string security_preset_name;
  SecretDist secret_dist = SecretDist::Ternary;
  std::size_t hamming_weight = 0;  // Sparse only
  double error_sigma = 3.2;

  void validate() const;

  std::string to_text() const;
  static CkksParams from_text(const std::string& text);
  /// SHA-256 of to_text(); stamped into every serialized object.
  Digest hash() const;

  friend bool operator==(const CkksParams&, const CkksParams&) = default;
};

/// Fills in max_level and slot_count from the ring.
CkksParams make_params(ring::RingParams ring, double scale, SecretDist dist = SecretDist::Ternary,
                       std::size_t hamming_weight = 0, double sigma = 3.2);

/// Chain q_0..q_L where q_0 is the largest prime below 2^q0_bits and each
/// q_l (l >= 1) is the prime nearest S_l^2 / scale, walking down from
/// S_L = scale. Every level then carries a scale within a hair of `scale`.
std::vector<std::uint64_t> scale_stable_chain(std::size_t ring_degree, int q0_bits, std::size_t levels,
                                              double scale, const std::vector<std::uint64_t>& exclude = {});

/// scale_stable_chain over levels - wide, topped with `wide` primes just under
/// 2^wide_bits. Returns the chain and the scale to use at the top level.
std::pair<std::vector<std::uint64_t>, double> widened_chain(std::size_t ring_degree, int q0_bits, std::size_t levels,
                                                            double scale, std::size_t wide, int wide_bits,
                                                            const std::vector<std::uint64_t>& exclude = {});

/// Canonical scale per level: S_L = scale, S_{l-1} = S_l^2 / q_l.
std::vector<double> canonical_scales(const CkksParams& p);

std::vector<std::string> preset_names();
/// Deterministically regenerates a preset from its recipe.
CkksParams generate_preset(std::string_view name);
/// Reads <dir>/<name>.params from HEBERT_PRESET_DIR or the source tree;
/// falls back to generation when no file is found.
CkksParams load_preset(std::string_view name);
std::string preset_directory();

}  // namespace hebert::ckks
