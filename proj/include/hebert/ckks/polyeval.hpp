#pragma once

#include <span>

#include "hebert/ckks/evaluator.hpp"
#include "hebert/minimax/remez.hpp"

namespace hebert::ckks {

/// Levels consumed evaluating a dense degree-d Chebyshev series on an input
/// already in [-1,1]: ceil(log2(d+1)), plus one when d+1 is a power of two
/// and d >= 15.
std::size_t poly_depth(std::size_t degree);

/// Levels consumed by eval_poly_bsgs, including the affine map onto [-1,1]
/// when the domain is not already [-1,1].
std::size_t poly_depth(const minimax::MinimaxPoly& p);

/// sum_k coeffs[k] T_k(t) slot-wise, t already in [-1,1]. Baby-step /
/// giant-step over Chebyshev powers; the result lands on the canonical scale
/// of level t.level() - depth.
Ciphertext eval_chebyshev(const Evaluator& ev, const Ciphertext& t, std::span<const double> coeffs);

/// p(x) slot-wise for x in p's domain.
Ciphertext eval_poly_bsgs(const Evaluator& ev, const Ciphertext& x, const minimax::MinimaxPoly& p);

}  // namespace hebert::ckks
