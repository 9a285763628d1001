#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hebert/ring/rns_poly.hpp"

namespace hebert::ring {

using Rng = std::mt19937_64;

enum class SampleKind { Ternary, SparseTernary, DiscreteGaussian, Uniform };

struct SampleSpec {
  SampleKind kind = SampleKind::Ternary;
  double sigma = 3.2;             // DiscreteGaussian
  std::size_t hamming_weight = 0;  // SparseTernary
};

/// Uniform over {-1, 0, 1}.
std::vector<std::int64_t> sample_ternary(Rng& rng, std::size_t n);
/// Exactly h nonzero entries, each +-1.
std::vector<std::int64_t> sample_sparse_ternary(Rng& rng, std::size_t n, std::size_t h);
/// Rounded Gaussian, tail-cut at 6 sigma.
std::vector<std::int64_t> sample_gaussian(Rng& rng, std::size_t n, double sigma);

/// Coefficient-form polynomial for small distributions; Uniform comes back
/// already in evaluation form (uniform is uniform in either basis).
RnsPoly sample_poly(const RingContextPtr& ctx, const std::vector<std::uint32_t>& moduli, const SampleSpec& spec,
                    Rng& rng);
RnsPoly sample_poly(const RingContextPtr& ctx, const std::vector<std::uint32_t>& moduli, const SampleSpec& spec,
                    std::uint64_t seed);

/// Seed from OS entropy for the non-reproducible default path.
std::uint64_t entropy_seed();

}  // namespace hebert::ring
