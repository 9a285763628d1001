#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "hebert/ckks/params.hpp"
#include "hebert/common/error.hpp"
#include "hebert/minimax/remez.hpp"

using namespace hebert;
using namespace hebert::minimax;

namespace {

using f128 = __float128;

// Chebyshev -> monomial in quad precision, then Horner.
f128 quad_eval(const MinimaxPoly& p, double x) {
  const std::size_t n = p.cheb_coeffs.size();
  std::vector<std::vector<f128>> t(n, std::vector<f128>(n, 0));
  t[0][0] = 1;
  if (n > 1) t[1][1] = 1;
  for (std::size_t k = 2; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) t[k][j] = (j ? 2 * t[k - 1][j - 1] : 0) - t[k - 2][j];
  std::vector<f128> mono(n, 0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) mono[j] += static_cast<f128>(p.cheb_coeffs[k]) * t[k][j];
  const f128 u = (2 * static_cast<f128>(x) - p.domain_lo - p.domain_hi) / (static_cast<f128>(p.domain_hi) - p.domain_lo);
  f128 h = 0;
  for (std::size_t k = n; k-- > 0;) h = h * u + mono[k];
  return h;
}

const MinimaxPoly& sigmoid15() {
  static const MinimaxPoly p = remez_fit(sigmoid_target(), -12, 12, 15);
  return p;
}

}  // namespace

TEST(Remez, SigmoidDegree15Error) {
  const auto& p = sigmoid15();
  EXPECT_EQ(p.degree, 15u);
  EXPECT_NEAR(p.certified_max_error, 0.00614, 0.00614 * 0.05);
  EXPECT_LE(max_error_scan(p, sigmoid_target(), 10000), 0.00614 * 1.05);
  EXPECT_TRUE(equioscillation_certificate(p, sigmoid_target()));
  const auto ext = error_extrema(p, sigmoid_target());
  std::size_t big = 0;
  for (const auto& e : ext) big += std::abs(e.error) >= 0.98 * p.certified_max_error;
  EXPECT_GE(big, 17u);
  for (std::size_t i = 1; i < ext.size(); ++i) EXPECT_LT(ext[i - 1].error * ext[i].error, 0.0);
}

TEST(Remez, CertifiedErrorEqualsBruteForce) {
  const auto p = remez_fit(sigmoid_target(), -4, 4, 3);
  long double brute = 0;
  const int n = 1000000;
  for (int i = 0; i <= n; ++i) {
    const long double x = -4.0L + 8.0L * i / n;
    brute = std::max(brute, std::abs(eval_cheb_ld(p, x) - 1.0L / (1.0L + std::exp(-x))));
  }
  EXPECT_NEAR(p.certified_max_error, static_cast<double>(brute), 1e-9 * p.certified_max_error);
  EXPECT_NEAR(max_error_scan(p, sigmoid_target(), 100000), p.certified_max_error, 1e-9 * p.certified_max_error);
}

TEST(Remez, GridRefinementIsStable) {
  const auto& p = sigmoid15();
  const double coarse = max_error_scan(p, sigmoid_target(), 10000);
  const double fine = max_error_scan(p, sigmoid_target(), 1000000);
  EXPECT_LT(std::abs(coarse - fine), 1e-6);
  EXPECT_GE(fine + 1e-15, coarse - 1e-9);
}

TEST(Remez, PolynomialTargetIsReproducedExactly) {
  const Target cubic{"cubic", [](long double x) { return 0.5L - 0.25L * x + x * x * x / 3; }};
  const auto p = remez_fit(cubic, -2, 3, 3);
  EXPECT_LT(max_error_scan(p, cubic, 2000), 1e-12);
  const auto lin = remez_fit(identity_target(), -1, 1, 1);
  EXPECT_NEAR(eval_cheb(lin, 0.3), 0.3, 1e-12);
}

TEST(Remez, PerturbingAnyCoefficientNeverHelps) {
  const auto& p = sigmoid15();
  const double base = max_error_scan(p, sigmoid_target(), 4000);
  for (std::size_t j = 0; j < p.cheb_coeffs.size(); ++j)
    for (double d : {1e-4, -1e-4}) {
      auto q = p;
      q.cheb_coeffs[j] += d;
      EXPECT_GE(max_error_scan(q, sigmoid_target(), 4000), base) << j << ' ' << d;
    }
}

TEST(Remez, ClenshawMatchesQuadMonomialOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t d : {1, 4, 15, 24, 31}) {
    MinimaxPoly p;
    p.degree = d;
    for (std::size_t k = 0; k <= d; ++k) p.cheb_coeffs.push_back(u(rng) / static_cast<double>(k + 1));
    for (int i = 0; i < 200; ++i) {
      const double x = u(rng);
      EXPECT_NEAR(eval_cheb(p, x), static_cast<double>(quad_eval(p, x)), 1e-10) << d;
    }
  }
  const auto& s = sigmoid15();
  for (double x = -12; x <= 12; x += 0.37) EXPECT_NEAR(eval_cheb(s, x), static_cast<double>(quad_eval(s, x)), 1e-10);
}

TEST(Remez, VectorEvaluationEqualsScalar) {
  const auto& p = sigmoid15();
  std::vector<double> xs;
  for (double x = -13; x <= 13; x += 0.01) xs.push_back(x);
  const auto v = eval_cheb(p, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(v[i], eval_cheb(p, xs[i]));
}

TEST(Remez, OutOfDomainIsFlagged) {
  bool out = false;
  eval_cheb(sigmoid15(), 20.0, &out);
  EXPECT_TRUE(out);
  eval_cheb(sigmoid15(), 0.0, &out);
  EXPECT_FALSE(out);
  EXPECT_NEAR(eval_cheb(sigmoid15(), 0.0), 0.5, 0.00614 * 1.05);
}

TEST(Remez, StalledExchangeReportsProfile) {
  RemezOptions o;
  o.max_iterations = 1;
  try {
    remez_fit(sigmoid_target(), -12, 12, 15, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Convergence);
    EXPECT_NE(std::string(e.what()).find("profile"), std::string::npos);
  }
  EXPECT_THROW(remez_fit(sigmoid_target(), 1, -1, 3), Error);
  EXPECT_THROW(target_by_name("tanhh"), Error);
}

TEST(Remez, TextArtifactRoundtripsAndMatchesShippedFile) {
  const auto& p = sigmoid15();
  const auto back = from_text(to_text(p));
  EXPECT_EQ(back.cheb_coeffs, p.cheb_coeffs);
  EXPECT_EQ(back.certified_max_error, p.certified_max_error);
  EXPECT_EQ(back.target_name, "sigmoid");
  std::ifstream in(ckks::preset_directory() + "/sigmoid-d15.minimax");
  ASSERT_TRUE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  const auto shipped = from_text(ss.str());
  ASSERT_EQ(shipped.cheb_coeffs.size(), p.cheb_coeffs.size());
  for (std::size_t k = 0; k < p.cheb_coeffs.size(); ++k) EXPECT_NEAR(shipped.cheb_coeffs[k], p.cheb_coeffs[k], 1e-12);
}

TEST(Remez, EvalModTargetIsAccurate) {
  const auto t = evalmod_target(16, 3);
  const auto p = remez_fit(t, -1, 1, 31);
  EXPECT_LT(p.certified_max_error, 1e-8);
  EXPECT_TRUE(equioscillation_certificate(p, t));
  EXPECT_EQ(target_by_name("evalmod:16:3").name, t.name);
}
