#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hebert::minimax {

/// A univariate target with a stable name ("sigmoid", "identity",
/// "evalmod:K:r", ...). Evaluated in extended precision.
struct Target {
  std::string name;
  std::function<long double(long double)> f;
};

Target sigmoid_target();
Target identity_target();
/// cos(2*pi*((K+1)x - 1/4) / 2^r) on [-1,1]; r double-angle steps turn it
/// into sin(2*pi*(K+1)x).
Target evalmod_target(int k, int r);
Target target_by_name(const std::string& name);

/// Minimax approximant in the Chebyshev basis of [a, b].
struct MinimaxPoly {
  std::vector<double> cheb_coeffs;
  double domain_lo = -1, domain_hi = 1;
  std::size_t degree = 0;
  double certified_max_error = 0;
  std::string target_name;
};

struct Extremum {
  double x;
  double error;  // signed p(x) - f(x)
};

struct RemezOptions {
  int max_iterations = 100;
  long double tolerance = 1e-12L;  // relative spread of |E| over the reference
  std::size_t grid = 0;            // 0: automatic
};

/// Throws Convergence with the last error profile when exchange stalls.
MinimaxPoly remez_fit(const Target& target, double lo, double hi, std::size_t degree, const RemezOptions& opt = {});

/// Clenshaw evaluation. `out_of_domain` (optional) reports x outside [a,b].
double eval_cheb(const MinimaxPoly& p, double x, bool* out_of_domain = nullptr);
std::vector<double> eval_cheb(const MinimaxPoly& p, std::span<const double> xs);
long double eval_cheb_ld(const MinimaxPoly& p, long double x);

/// max |p - target| over a Chebyshev-spaced grid of `grid_points` nodes.
double max_error_scan(const MinimaxPoly& p, const Target& target, std::size_t grid_points);

/// Alternating local extrema of p - target (one per sign run, refined).
std::vector<Extremum> error_extrema(const MinimaxPoly& p, const Target& target, std::size_t grid = 0);

/// True when at least degree+2 alternating extrema reach 98% of the
/// certified error.
bool equioscillation_certificate(const MinimaxPoly& p, const Target& target);

/// Monomial coefficients in x (test oracle only; ill-conditioned).
std::vector<long double> to_monomial(const MinimaxPoly& p);

std::string to_text(const MinimaxPoly& p);
MinimaxPoly from_text(const std::string& text);

}  // namespace hebert::minimax
