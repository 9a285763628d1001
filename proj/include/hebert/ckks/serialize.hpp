#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hebert/ckks/ciphertext.hpp"
#include "hebert/ckks/keys.hpp"
#include "hebert/ckks/params.hpp"

namespace hebert::ckks {

inline constexpr std::uint16_t kFormatVersion = 1;
/// magic + version + params hash + level + scale + slot count
inline constexpr std::size_t kCiphertextHeaderBytes = 4 + 2 + 32 + 1 + 8 + 4;

std::vector<std::uint8_t> serialize(const CkksContext& ctx, const Ciphertext& ct);
Ciphertext deserialize_ciphertext(const CkksContext& ctx, std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize(const CkksContext& ctx, const Plaintext& pt);
Plaintext deserialize_plaintext(const CkksContext& ctx, std::span<const std::uint8_t> bytes);

enum class KeyParts : std::uint8_t {
  Secret = 1,
  Public = 2,
  Eval = 4,
  PublicAndEval = 6,
};

/// Writes only the requested parts; asking for an absent part is an error.
std::vector<std::uint8_t> serialize(const CkksContext& ctx, const KeySet& keys, KeyParts parts);
KeySet deserialize_keys(const CkksContext& ctx, std::span<const std::uint8_t> bytes);

/// Bytes for `count` serialized ciphertexts at `level`. Pure arithmetic.
std::uint64_t size_report(const CkksParams& params, std::size_t level, std::size_t count);

}  // namespace hebert::ckks
