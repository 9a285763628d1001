#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "hebert/ckks/evaluator.hpp"
#include "hebert/ckks/keys.hpp"
#include "hebert/minimax/remez.hpp"

namespace hebert::boot {

using ckks::Ciphertext;
using ckks::cplx;

/// A slot-space linear map in diagonal form: A v = sum_k diag[k] * rot(v, k).
/// Offsets are centred in (-n/2, n/2] and share a common power-of-two stride.
struct DiagMatrix {
  std::size_t slots = 0;
  std::int64_t stride = 1;
  std::vector<std::pair<std::int64_t, std::vector<cplx>>> diags;

  std::vector<cplx> apply(const std::vector<cplx>& v) const;
};

/// Butterfly stages of the slot DFT. `cts_stage(len)` undoes the encoder's
/// stage of half-width len/2; `stc_stage(len)` redoes it.
DiagMatrix cts_stage(const ckks::CkksContext& ctx, std::size_t len);
DiagMatrix stc_stage(const ckks::CkksContext& ctx, std::size_t len);
/// a after b.
DiagMatrix compose(const DiagMatrix& a, const DiagMatrix& b);

struct BootstrapConfig {
  int k_bound = 16;             // |I| bound of the modulus overflow after ModRaise
  int double_angles = 3;
  std::size_t evalmod_degree = 31;
  std::size_t cts_groups = 3;
  std::size_t stc_groups = 3;
  double message_bound = 1.0;   // |slot| bound assumed when rescaling the input
  int headroom_bits = 8;        // log2(q0 / input scale) for a unit message
};

class BootstrapContext {
 public:
  static BootstrapContext create(ckks::CkksContextPtr ctx, const BootstrapConfig& cfg = {});

  const ckks::CkksContextPtr& context() const { return ctx_; }
  const BootstrapConfig& config() const { return cfg_; }
  /// CoeffToSlot groups in application order (output in bit-reversed order).
  const std::vector<DiagMatrix>& cts_matrices() const { return cts_; }
  /// SlotToCoeff groups in application order (input in bit-reversed order).
  const std::vector<DiagMatrix>& stc_matrices() const { return stc_; }
  const minimax::MinimaxPoly& evalmod_poly() const { return evalmod_; }
  std::size_t consumed_levels() const;
  std::size_t output_level() const;
  /// Scale the input is moved to at level 0: q0 / 2^headroom / message_bound.
  double input_scale() const;
  /// Lowest level accepted by bootstrap(); level 0 inputs skip the scale
  /// adjustment and are trusted to respect message_bound.
  static constexpr std::size_t input_level = 1;

  /// Key material bootstrap() needs: relinearisation, conjugation and the
  /// signed power-of-two rotations.
  ckks::KeygenOptions keygen_options() const;

 private:
  ckks::CkksContextPtr ctx_;
  BootstrapConfig cfg_;
  std::vector<DiagMatrix> cts_, stc_;
  minimax::MinimaxPoly evalmod_;
};

/// Homomorphic refresh: ModRaise, CoeffToSlot, EvalMod, SlotToCoeff. With an
/// audit key the result is decrypted and compared; an error above
/// `audit_tolerance` raises Precision with the measured value.
Ciphertext bootstrap(const ckks::Evaluator& ev, const BootstrapContext& bc, const Ciphertext& ct,
                     const ckks::SecretKey* audit = nullptr, double audit_tolerance = 1e-2);

/// Lift a level-0 ciphertext to the top of the chain (coefficients centred
/// mod q0). The scale label is left for the caller to set.
Ciphertext mod_raise(const ckks::CkksContext& ctx, const Ciphertext& ct);

/// Apply one diagonal-form group: baby-step/giant-step rotations, a single
/// rescale, output exactly on `out_scale`.
Ciphertext apply_linear(const ckks::Evaluator& ev, const Ciphertext& ct, const DiagMatrix& m, double out_scale);

/// Insecure decrypt/re-encrypt at the top level. Refuses unless `enabled`.
Ciphertext debug_refresh(const ckks::CkksContextPtr& ctx, const Ciphertext& ct, const ckks::SecretKey& sk,
                         const ckks::PublicKey& pk, bool enabled, std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace hebert::boot
