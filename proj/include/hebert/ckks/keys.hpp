#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "hebert/ckks/context.hpp"
#include "hebert/ring/rns_poly.hpp"
#include "hebert/ring/sampling.hpp"

namespace hebert::ckks {

struct SecretKey {
  ring::RnsPoly s;  // evaluation form over every chain and special prime
};

struct PublicKey {
  ring::RnsPoly b, a;  // b = -a*s + e over q_0..q_L
};

/// Hybrid key-switching key from s' to s: one (b_j, a_j) pair per digit,
/// b_j = -a_j*s + e_j + P*s' restricted to the primes of digit j.
struct SwitchKey {
  std::vector<ring::RnsPoly> b, a;
};

struct EvalKeys {
  std::optional<SwitchKey> relin;
  std::map<std::uint64_t, SwitchKey> galois;  // keyed by Galois element
  std::vector<std::int64_t> rotation_steps;   // as requested at keygen

  bool has_galois(std::uint64_t g) const { return galois.count(g) != 0; }
};

struct KeySet {
  std::optional<SecretKey> secret;
  std::optional<PublicKey> pub;
  EvalKeys eval;
};

struct KeygenOptions {
  std::vector<std::int64_t> rotation_steps;
  bool conjugation = false;
  bool relinearization = true;
};

/// Galois element realising a left rotation by `step` slots.
std::uint64_t galois_for_step(std::int64_t step, std::size_t ring_degree);
std::uint64_t galois_for_conjugation(std::size_t ring_degree);

/// +-1, +-2, ..., +-slots/2.
std::vector<std::int64_t> power_of_two_steps(std::size_t slot_count);

KeySet keygen(const CkksContextPtr& ctx, const KeygenOptions& opts, std::uint64_t seed);

SwitchKey make_switch_key(const CkksContext& ctx, const SecretKey& sk, const ring::RnsPoly& s_from,
                          ring::Rng& rng);

}  // namespace hebert::ckks
