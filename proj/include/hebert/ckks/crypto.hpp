#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hebert/ckks/ciphertext.hpp"
#include "hebert/ckks/encoder.hpp"
#include "hebert/ckks/keys.hpp"

namespace hebert::ckks {

/// Public-key encryption. Owns its RNG; one instance per thread.
class Encryptor {
 public:
  /// No seed: draw one from OS entropy.
  Encryptor(CkksContextPtr ctx, PublicKey pk, std::optional<std::uint64_t> seed = std::nullopt);

  /// Encrypts at pt.level(), or at target_level when given (the plaintext is
  /// truncated to it; raising is not possible).
  Ciphertext encrypt(const Plaintext& pt, std::optional<std::size_t> target_level = std::nullopt);
  Ciphertext encrypt_values(std::span<const double> values, std::size_t level);
  Ciphertext encrypt_values(std::span<const cplx> values, std::size_t level);

  const CkksContextPtr& context() const { return ctx_; }

 private:
  CkksContextPtr ctx_;
  PublicKey pk_;
  ring::Rng rng_;
};

Ciphertext encrypt_symmetric(const CkksContext& ctx, const Plaintext& pt, const SecretKey& sk, ring::Rng& rng);

Plaintext decrypt(const CkksContext& ctx, const Ciphertext& ct, const SecretKey& sk);
std::vector<double> decrypt_real(const CkksContext& ctx, const Ciphertext& ct, const SecretKey& sk);
std::vector<cplx> decrypt_complex(const CkksContext& ctx, const Ciphertext& ct, const SecretKey& sk);

}  // namespace hebert::ckks
