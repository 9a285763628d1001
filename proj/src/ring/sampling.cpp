#include "hebert/ring/sampling.hpp"

#include <cmath>
#include <numeric>

#include "hebert/common/error.hpp"

namespace hebert::ring {

std::vector<std::int64_t> sample_ternary(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<int> d(-1, 1);
  std::vector<std::int64_t> out(n);
  for (auto& v : out) v = d(rng);
  return out;
}

std::vector<std::int64_t> sample_sparse_ternary(Rng& rng, std::size_t n, std::size_t h) {
  require(h <= n, "ring-arith", ErrorCode::InvalidArgument, "hamming weight exceeds ring degree");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < h; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::bernoulli_distribution sign(0.5);
  std::vector<std::int64_t> out(n, 0);
  for (std::size_t i = 0; i < h; ++i) out[idx[i]] = sign(rng) ? 1 : -1;
  return out;
}

std::vector<std::int64_t> sample_gaussian(Rng& rng, std::size_t n, double sigma) {
  require(sigma > 0, "ring-arith", ErrorCode::InvalidArgument, "gaussian sigma must be positive");
  std::normal_distribution<double> d(0.0, sigma);
  const double cut = 6.0 * sigma;
  std::vector<std::int64_t> out(n);
  for (auto& v : out) {
    double x;
    do x = d(rng);
    while (std::abs(x) > cut);
    v = std::llround(x);
  }
  return out;
}

RnsPoly sample_poly(const RingContextPtr& ctx, const std::vector<std::uint32_t>& moduli, const SampleSpec& spec,
                    Rng& rng) {
  const std::size_t n = ctx->degree();
  switch (spec.kind) {
    case SampleKind::Ternary: {
      auto c = sample_ternary(rng, n);
      return from_signed(ctx, moduli, c);
    }
    case SampleKind::SparseTernary: {
      auto c = sample_sparse_ternary(rng, n, spec.hamming_weight);
      return from_signed(ctx, moduli, c);
    }
    case SampleKind::DiscreteGaussian: {
      auto c = sample_gaussian(rng, n, spec.sigma);
      return from_signed(ctx, moduli, c);
    }
    case SampleKind::Uniform: {
      RnsPoly out(ctx, moduli, PolyForm::Evaluation);
      for (std::size_t i = 0; i < out.limb_count(); ++i) {
        std::uniform_int_distribution<std::uint64_t> d(0, out.modulus(i).value() - 1);
        for (auto& v : out.limb(i)) v = d(rng);
      }
      return out;
    }
  }
  fail("ring-arith", ErrorCode::InvalidArgument, "unknown sample kind");
}

RnsPoly sample_poly(const RingContextPtr& ctx, const std::vector<std::uint32_t>& moduli, const SampleSpec& spec,
                    std::uint64_t seed) {
  Rng rng(seed);
  return sample_poly(ctx, moduli, spec, rng);
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace hebert::ring
