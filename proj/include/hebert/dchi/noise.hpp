#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace hebert::dchi {

/// Density proportional to exp(-eta * ||N||) in `dim` dimensions.
struct NoiseParams {
  double eta = 175.0;
  std::uint32_t dim = 768;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// N = r * p, r ~ Gamma(shape dim, scale 1/eta), p uniform on the unit sphere.
std::vector<double> sample_noise(const NoiseParams& params, std::mt19937_64& rng);
/// Convenience: a fresh generator seeded from params.rng_seed.
std::vector<double> sample_noise(const NoiseParams& params);

/// y + N, drawing N from `rng`.
std::vector<double> privatize(std::span<const double> y, const NoiseParams& params, std::mt19937_64& rng);
std::vector<double> privatize(std::span<const double> y, const NoiseParams& params);

}  // namespace hebert::dchi
