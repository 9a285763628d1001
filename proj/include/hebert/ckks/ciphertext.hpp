#pragma once

#include <cstddef>

#include "hebert/ring/rns_poly.hpp"

namespace hebert::ckks {

/// Encoded message: an evaluation-form polynomial over q_0..q_level.
struct Plaintext {
  ring::RnsPoly poly;
  double scale = 1.0;

  std::size_t level() const { return poly.level(); }
};

/// (c0, c1) with c0 + c1*s = scale * m. Both halves stay in evaluation form.
struct Ciphertext {
  ring::RnsPoly c0, c1;
  double scale = 1.0;
  std::size_t slot_count = 0;
  /// Set once a secret-key refresh has touched this value (or its inputs).
  bool insecure_provenance = false;

  std::size_t level() const { return c0.level(); }
};

}  // namespace hebert::ckks
