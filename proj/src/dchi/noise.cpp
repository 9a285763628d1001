#include "hebert/dchi/noise.hpp"

#include <cmath>

#include "hebert/common/error.hpp"

namespace hebert::dchi {

namespace {
constexpr const char* kModule = "dchi-noise";
}

void NoiseParams::validate() const {
  require(eta > 0 && std::isfinite(eta), kModule, ErrorCode::InvalidArgument, "eta must be positive");
  require(dim >= 1, kModule, ErrorCode::InvalidArgument, "dimension must be at least 1");
}

std::vector<double> sample_noise(const NoiseParams& params, std::mt19937_64& rng) {
  params.validate();
  std::gamma_distribution<double> radius(static_cast<double>(params.dim), 1.0 / params.eta);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(params.dim);
  double norm = 0;
  do {
    norm = 0;
    for (auto& x : v) {
      x = gauss(rng);
      norm += x * x;
    }
  } while (norm == 0);
  norm = std::sqrt(norm);
  const double r = radius(rng);
  for (auto& x : v) x = x / norm * r;
  return v;
}

std::vector<double> sample_noise(const NoiseParams& params) {
  std::mt19937_64 rng(params.rng_seed);
  return sample_noise(params, rng);
}

std::vector<double> privatize(std::span<const double> y, const NoiseParams& params, std::mt19937_64& rng) {
  require(y.size() == params.dim, kModule, ErrorCode::InvalidArgument,
          "vector has " + std::to_string(y.size()) + " entries, noise dimension is " + std::to_string(params.dim));
  auto out = sample_noise(params, rng);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return out;
}

std::vector<double> privatize(std::span<const double> y, const NoiseParams& params) {
  std::mt19937_64 rng(params.rng_seed);
  return privatize(y, params, rng);
}

}  // namespace hebert::dchi
