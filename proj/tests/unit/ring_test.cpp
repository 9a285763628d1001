#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hebert/common/error.hpp"
#include "hebert/common/parallel.hpp"
#include "hebert/ring/rns_poly.hpp"
#include "hebert/ring/sampling.hpp"

using namespace hebert;
using namespace hebert::ring;

namespace {

RingContextPtr make_ctx(std::size_t n, std::vector<std::uint64_t> q) {
  RingParams p{"t", n, std::move(q), {}};
  return std::make_shared<const RingContext>(p);
}

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t q) {
  return static_cast<std::uint64_t>(static_cast<u128>(a) * b % q);
}

std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t q) {
  std::uint64_t r = 1;
  for (; e; e >>= 1, b = mulmod(b, b, q))
    if (e & 1) r = mulmod(r, b, q);
  return r;
}

// schoolbook product in Z_q[X]/(X^N+1)
std::vector<std::uint64_t> negacyclic(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                                      std::uint64_t q) {
  const std::size_t n = a.size();
  std::vector<std::uint64_t> c(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint64_t t = mulmod(a[i], b[j], q);
      const std::size_t k = i + j;
      if (k < n)
        c[k] = (c[k] + t) % q;
      else
        c[k - n] = (c[k - n] + q - t) % q;
    }
  return c;
}

RnsPoly random_poly(const RingContextPtr& ctx, std::mt19937_64& rng) {
  RnsPoly p(ctx, ctx->chain_indices(ctx->max_level()), PolyForm::Coefficient);
  for (std::size_t i = 0; i < p.limb_count(); ++i) {
    std::uniform_int_distribution<std::uint64_t> d(0, p.modulus(i).value() - 1);
    for (auto& v : p.limb(i)) v = d(rng);
  }
  return p;
}

std::vector<std::uint64_t> to_vec(std::span<const std::uint64_t> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Modulus, BarrettMatchesWideDivision) {
  std::mt19937_64 rng(1);
  for (auto q : primes_below(61, 1 << 13, 3)) {
    Modulus m(q);
    for (int i = 0; i < 20000; ++i) {
      const std::uint64_t a = rng() % q, b = rng() % q;
      ASSERT_EQ(m.mul(a, b), mulmod(a, b, q));
      const std::uint64_t x = rng();
      ASSERT_EQ(m.mul_shoup(x, b, m.shoup(b)), mulmod(x % q, b, q));
    }
  }
}

TEST(Modulus, SignedLift) {
  Modulus m(97);
  for (int v = -48; v <= 48; ++v) EXPECT_EQ(m.to_signed(m.from_signed(v)), v);
  EXPECT_EQ(m.from_signed(INT64_MIN + 1), m.neg(m.reduce(static_cast<std::uint64_t>(INT64_MAX))));
}

TEST(Primes, SearchProducesNttFriendlyPrimes) {
  const std::size_t n = 1 << 13;
  auto ps = primes_below(40, n, 5);
  for (auto p : ps) {
    EXPECT_TRUE(is_prime(p));
    EXPECT_EQ(p % (2 * n), 1u);
    EXPECT_LT(p, std::uint64_t{1} << 40);
  }
  EXPECT_TRUE(std::is_sorted(ps.rbegin(), ps.rend()));
  const auto near = prime_nearest(std::ldexp(1.0, 45), n, {});
  EXPECT_LT(std::abs(static_cast<double>(near) - std::ldexp(1.0, 45)), 1e7);
  EXPECT_FALSE(is_prime(561));
  EXPECT_FALSE(is_prime(3215031751ULL));
}

TEST(RingParams, ValidationRejectsBadInput) {
  EXPECT_THROW((RingParams{"x", 24, {97}, {}}.validate()), Error);
  EXPECT_THROW((RingParams{"x", 16, {89}, {}}.validate()), Error);
  EXPECT_THROW((RingParams{"x", 16, {97, 97}, {}}.validate()), Error);
  EXPECT_THROW((RingParams{"x", 16, {99}, {}}.validate()), Error);
  EXPECT_NO_THROW((RingParams{"x", 16, {97, 193}, {}}.validate()));
}

TEST(RingParams, TextRoundtrip) {
  RingParams p{"desk", 1 << 13, primes_below(40, 1 << 13, 4), primes_below(61, 1 << 13, 2)};
  const auto text = p.to_text();
  EXPECT_EQ(RingParams::from_text(text), p);
  EXPECT_THROW(RingParams::from_text("bogus\n"), Error);
}

TEST(Ntt, ZeroAndConstant) {
  auto ctx = make_ctx(16, {97});
  RnsPoly z(ctx, {0}, PolyForm::Coefficient);
  auto zf = ntt_transform(z, NttDirection::Forward);
  EXPECT_EQ(zf.form(), PolyForm::Evaluation);
  for (auto v : zf.limb(0)) EXPECT_EQ(v, 0u);
  RnsPoly c(ctx, {0}, PolyForm::Coefficient);
  c.limb(0)[0] = 42;
  auto cf = ntt_transform(c, NttDirection::Forward);
  for (auto v : cf.limb(0)) EXPECT_EQ(v, 42u);
}

TEST(Ntt, WrongFormIsRejected) {
  auto ctx = make_ctx(16, {97});
  RnsPoly p(ctx, {0}, PolyForm::Coefficient);
  try {
    (void)ntt_transform(p, NttDirection::Inverse);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FormMismatch);
  }
  auto f = ntt_transform(p, NttDirection::Forward);
  EXPECT_THROW((void)ntt_transform(f, NttDirection::Forward), Error);
}

// slot k must equal p(psi^(2 bitrev(k) + 1))
TEST(Ntt, MatchesDirectEvaluation) {
  for (auto [n, q] : {std::pair<std::size_t, std::uint64_t>{16, 97}, {64, 257}}) {
    auto ctx = make_ctx(n, {q});
    std::mt19937_64 rng(n);
    auto p = random_poly(ctx, rng);
    auto f = ntt_transform(p, NttDirection::Forward);
    const std::uint64_t psi = ctx->ntt(0).root();
    ASSERT_EQ(powmod(psi, n, q), q - 1);
    const int logn = std::countr_zero(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint64_t x = powmod(psi, 2 * reverse_bits(static_cast<std::uint32_t>(k), logn) + 1, q);
      std::uint64_t acc = 0;
      for (std::size_t j = n; j-- > 0;) acc = (mulmod(acc, x, q) + p.limb(0)[j]) % q;
      EXPECT_EQ(f.limb(0)[k], acc) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Ntt, RoundtripIsExact) {
  auto ctx = make_ctx(1 << 12, primes_below(60, 1 << 12, 3));
  std::mt19937_64 rng(9);
  for (int t = 0; t < 5; ++t) {
    auto p = random_poly(ctx, rng);
    auto back = ntt_transform(ntt_transform(p, NttDirection::Forward), NttDirection::Inverse);
    EXPECT_EQ(back, p);
  }
  auto small = make_ctx(16, {97});
  auto p = random_poly(small, rng);
  EXPECT_EQ(ntt_transform(ntt_transform(p, NttDirection::Forward), NttDirection::Inverse), p);
}

TEST(PolyMul, MatchesSchoolbook) {
  for (auto [n, q] : {std::pair<std::size_t, std::uint64_t>{16, 97}, {64, 257}, {64, primes_below(59, 64, 1)[0]}}) {
    auto ctx = make_ctx(n, {q});
    std::mt19937_64 rng(n + q);
    for (int t = 0; t < 10; ++t) {
      auto a = random_poly(ctx, rng), b = random_poly(ctx, rng);
      auto c = ntt_transform(poly_mul(ntt_transform(a, NttDirection::Forward), ntt_transform(b, NttDirection::Forward)),
                             NttDirection::Inverse);
      EXPECT_EQ(to_vec(c.limb(0)), negacyclic(to_vec(a.limb(0)), to_vec(b.limb(0)), q));
    }
  }
}

TEST(PolyMul, IdentityAndWraparound) {
  const std::size_t n = 64;
  auto ctx = make_ctx(n, {257, 641});
  std::mt19937_64 rng(3);
  auto a = random_poly(ctx, rng);
  RnsPoly one(ctx, {0, 1}, PolyForm::Coefficient);
  one.limb(0)[0] = one.limb(1)[0] = 1;
  auto af = ntt_transform(a, NttDirection::Forward);
  EXPECT_EQ(poly_mul(af, ntt_transform(one, NttDirection::Forward)), af);

  RnsPoly h(ctx, {0, 1}, PolyForm::Coefficient);
  h.limb(0)[n / 2] = h.limb(1)[n / 2] = 1;
  auto hf = ntt_transform(h, NttDirection::Forward);
  auto sq = ntt_transform(poly_mul(hf, hf), NttDirection::Inverse);
  EXPECT_EQ(sq.limb(0)[0], 256u);
  EXPECT_EQ(sq.limb(1)[0], 640u);
  for (std::size_t i = 1; i < n; ++i) EXPECT_EQ(sq.limb(0)[i], 0u);
}

TEST(PolyMul, LevelMismatchRejected) {
  auto ctx = make_ctx(16, {97, 193});
  auto a = RnsPoly::zero(ctx, 1, PolyForm::Evaluation);
  auto b = RnsPoly::zero(ctx, 0, PolyForm::Evaluation);
  try {
    (void)poly_mul(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LevelMismatch);
  }
}

TEST(PolyArith, CommutativeAssociative) {
  auto ctx = make_ctx(64, primes_below(50, 64, 3));
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    auto a = ntt_transform(random_poly(ctx, rng), NttDirection::Forward);
    auto b = ntt_transform(random_poly(ctx, rng), NttDirection::Forward);
    auto c = ntt_transform(random_poly(ctx, rng), NttDirection::Forward);
    EXPECT_EQ(poly_mul(a, b), poly_mul(b, a));
    EXPECT_EQ(poly_add(a, b), poly_add(b, a));
    EXPECT_EQ(poly_mul(poly_mul(a, b), c), poly_mul(a, poly_mul(b, c)));
    EXPECT_EQ(poly_add(poly_add(a, b), c), poly_add(a, poly_add(b, c)));
    EXPECT_EQ(poly_sub(poly_add(a, b), b), a);
  }
}

TEST(Automorphism, EvaluationFormMatchesCoefficientForm) {
  auto ctx = make_ctx(64, {257, 641});
  std::mt19937_64 rng(5);
  auto a = random_poly(ctx, rng);
  for (std::uint64_t g : {5ull, 25ull, 127ull, 3ull}) {
    auto viacoef = ntt_transform(a.automorphism(g), NttDirection::Forward);
    auto viaeval = ntt_transform(a, NttDirection::Forward).automorphism(g);
    EXPECT_EQ(viacoef, viaeval) << g;
  }
  // X -> X^g on the monomial X
  RnsPoly x(ctx, {0, 1}, PolyForm::Coefficient);
  x.limb(0)[1] = x.limb(1)[1] = 1;
  auto y = x.automorphism(127);
  EXPECT_EQ(y.limb(0)[63], 256u);
}

TEST(Parallel, ResultIndependentOfThreadCount) {
  auto ctx = make_ctx(1 << 12, primes_below(55, 1 << 12, 6));
  std::mt19937_64 rng(2);
  auto a = random_poly(ctx, rng), b = random_poly(ctx, rng);
  set_thread_count(1);
  auto r1 = poly_mul(ntt_transform(a, NttDirection::Forward), ntt_transform(b, NttDirection::Forward));
  set_thread_count(4);
  auto r4 = poly_mul(ntt_transform(a, NttDirection::Forward), ntt_transform(b, NttDirection::Forward));
  set_thread_count(1);
  EXPECT_EQ(r1, r4);
}

TEST(Sampling, TernaryDensity) {
  auto ctx = make_ctx(1 << 13, primes_below(40, 1 << 13, 1));
  auto p = sample_poly(ctx, {0}, {SampleKind::Ternary}, 77);
  const auto& q = p.modulus(0);
  std::size_t zeros = 0;
  for (auto v : p.limb(0)) {
    const auto s = q.to_signed(v);
    ASSERT_TRUE(s >= -1 && s <= 1);
    zeros += s == 0;
  }
  EXPECT_NEAR(static_cast<double>(zeros) / 8192.0, 1.0 / 3.0, 0.05);
}

TEST(Sampling, SparseTernaryWeight) {
  std::mt19937_64 rng(4);
  auto c = sample_sparse_ternary(rng, 1 << 13, 64);
  std::size_t nz = 0;
  for (auto v : c) nz += v != 0;
  EXPECT_EQ(nz, 64u);
}

TEST(Sampling, GaussianMoments) {
  std::mt19937_64 rng(8);
  auto c = sample_gaussian(rng, 1 << 13, 3.2);
  double m = 0, m2 = 0;
  for (auto v : c) m += v;
  m /= c.size();
  for (auto v : c) m2 += (v - m) * (v - m);
  const double sd = std::sqrt(m2 / (c.size() - 1));
  EXPECT_LT(std::abs(m), 0.5);
  EXPECT_NEAR(sd, 3.2, 0.32);
}

TEST(Sampling, Deterministic) {
  auto ctx = make_ctx(1 << 10, primes_below(40, 1 << 10, 2));
  for (auto kind : {SampleKind::Ternary, SampleKind::DiscreteGaussian, SampleKind::Uniform}) {
    SampleSpec s{kind};
    EXPECT_EQ(sample_poly(ctx, {0, 1}, s, 123), sample_poly(ctx, {0, 1}, s, 123));
  }
  auto u = sample_poly(ctx, {0, 1}, {SampleKind::Uniform}, 5);
  for (std::size_t i = 0; i < 2; ++i)
    for (auto v : u.limb(i)) ASSERT_LT(v, u.modulus(i).value());
}
