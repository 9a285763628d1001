#include "hebert/ckks/polyeval.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <optional>

#include "hebert/ckks/context.hpp"
#include "hebert/common/error.hpp"

namespace hebert::ckks {

namespace {
constexpr const char* kModule = "ckks-core";
constexpr long kInfeasible = -1000000;

std::size_t ceil_log2(std::size_t k) { return k <= 1 ? 0 : std::bit_width(k - 1); }

std::size_t top_degree(const std::vector<double>& c) {
  std::size_t d = c.size();
  while (d > 1 && c[d - 1] == 0.0) --d;
  return d == 0 ? 0 : d - 1;
}

struct Split {
  std::vector<double> q, r;
};

// c = q * T_g + r with deg r < g, using T_k = 2 T_g T_{k-g} - T_{2g-k}.
Split divide(const std::vector<double>& c, std::size_t g) {
  Split s;
  s.r.assign(g, 0.0);
  s.q.assign(c.size() > g ? c.size() - g : 1, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k < g) {
      s.r[k] += c[k];
    } else if (k == g) {
      s.q[0] += c[k];
    } else {
      s.q[k - g] += 2 * c[k];
      s.r[2 * g - k] -= c[k];
    }
  }
  return s;
}

// Shared between the dry run (levels only) and the real evaluation.
class Plan {
 public:
  Plan(std::size_t input_level, std::size_t degree) : top_(static_cast<long>(input_level)) {
    const std::size_t m = ceil_log2(degree + 1) == 0 ? 1 : ceil_log2(degree + 1);
    baby_ = std::size_t{1} << std::max<std::size_t>(1, m / 2);
  }

  std::size_t baby() const { return baby_; }
  long power_level(std::size_t k) const { return top_ - static_cast<long>(ceil_log2(k)); }

  std::size_t giant_for(std::size_t deg) const { return std::bit_floor(deg); }

  // Highest level at which `c` can be produced.
  long feasible(const std::vector<double>& c) const {
    const std::size_t d = top_degree(c);
    if (d < baby_) {
      long lvl = top_;  // a pure constant lives anywhere
      for (std::size_t k = 1; k <= d && k < c.size(); ++k)
        if (c[k] != 0.0) lvl = std::min(lvl, power_level(k) - 1);
      return lvl;
    }
    const std::size_t g = giant_for(d);
    const auto s = divide(trimmed(c, d), g);
    long lvl = power_level(g) - 1;
    if (top_degree(s.q) > 0) lvl = std::min(lvl, feasible(s.q) - 1);
    lvl = std::min(lvl, feasible(s.r));
    return lvl;
  }

  static std::vector<double> trimmed(const std::vector<double>& c, std::size_t d) {
    return {c.begin(), c.begin() + static_cast<std::ptrdiff_t>(d + 1)};
  }

 private:
  long top_;
  std::size_t baby_;
};

class Runner {
 public:
  Runner(const Evaluator& ev, const Plan& plan, const Ciphertext& t) : ev_(ev), ctx_(*ev.context()), plan_(plan) {
    powers_[1] = t;
  }

  const Ciphertext& power(std::size_t k) {
    auto it = powers_.find(k);
    if (it != powers_.end()) return it->second;
    Ciphertext out;
    if (std::has_single_bit(k)) {
      const auto& h = power(k / 2);
      out = ev_.add_const(ev_.mult_int(ev_.square(h), 2), -1.0);
    } else {
      const std::size_t i = std::bit_floor(k);
      const std::size_t j = k - i;
      Ciphertext prod = ev_.mult(power(i), power(j));
      prod = ev_.mult_int(prod, 2);
      out = j == i ? ev_.add_const(prod, -1.0) : ev_.sub(prod, power(i - j));
    }
    return powers_.emplace(k, std::move(out)).first->second;
  }

  std::optional<Ciphertext> eval(const std::vector<double>& c, std::size_t level, double scale) {
    const std::size_t d = top_degree(c);
    if (d < plan_.baby()) return leaf(c, d, level, scale);
    const std::size_t g = plan_.giant_for(d);
    const auto s = divide(Plan::trimmed(c, d), g);
    const Ciphertext& tg = power(g);
    Ciphertext hi;
    if (top_degree(s.q) == 0) {
      hi = ev_.mult_const(tg, s.q[0], level, scale);
    } else {
      const double qscale = scale * static_cast<double>(ctx_.prime(level + 1)) / tg.scale;
      auto qct = eval(s.q, level + 1, qscale);
      hi = ev_.mult(*qct, tg);
      hi.scale = scale;
    }
    auto lo = eval(s.r, level, scale);
    if (lo) ev_.add_inplace(hi, *lo);
    return hi;
  }

 private:
  std::optional<Ciphertext> leaf(const std::vector<double>& c, std::size_t d, std::size_t level, double scale) {
    std::optional<Ciphertext> acc;
    const double q = static_cast<double>(ctx_.prime(level + 1 <= ctx_.max_level() ? level + 1 : level));
    for (std::size_t k = 1; k <= d; ++k) {
      if (c[k] == 0.0) continue;
      const Ciphertext t = ev_.mod_down(power(k), level + 1);
      Ciphertext term = ev_.mult_const_noscale(t, c[k], scale * q / t.scale);
      term.scale = scale * q;
      if (acc)
        ev_.add_inplace(*acc, term);
      else
        acc = std::move(term);
    }
    if (acc) {
      if (c[0] != 0.0) *acc = ev_.add_const(*acc, c[0]);
      Ciphertext out = ev_.rescale(*acc);
      out.scale = scale;
      return out;
    }
    if (c.empty() || c[0] == 0.0) return std::nullopt;
    const auto pt = encode_constant(ctx_, c[0], level, scale);
    Ciphertext out = trivial_ciphertext(ctx_, pt);
    out.slot_count = powers_.at(1).slot_count;
    return out;
  }

  const Evaluator& ev_;
  const CkksContext& ctx_;
  const Plan& plan_;
  std::map<std::size_t, Ciphertext> powers_;
};

long dense_feasible(std::size_t degree, std::size_t top) {
  const Plan plan(top, degree);
  return plan.feasible(std::vector<double>(degree + 1, 1.0));
}

bool unit_domain(const minimax::MinimaxPoly& p) { return p.domain_lo == -1.0 && p.domain_hi == 1.0; }

}  // namespace

std::size_t poly_depth(std::size_t degree) {
  const std::size_t top = 64;
  return static_cast<std::size_t>(static_cast<long>(top) - dense_feasible(degree, top));
}

std::size_t poly_depth(const minimax::MinimaxPoly& p) { return poly_depth(p.degree) + (unit_domain(p) ? 0 : 1); }

Ciphertext eval_chebyshev(const Evaluator& ev, const Ciphertext& t, std::span<const double> coeffs) {
  require(!coeffs.empty(), kModule, ErrorCode::InvalidArgument, "empty coefficient list");
  std::vector<double> c(coeffs.begin(), coeffs.end());
  const std::size_t d = top_degree(c);
  const Plan plan(t.level(), d);
  const long out = plan.feasible(c);
  if (out < 0 || (d == 0 && t.level() == 0))
    fail(kModule, ErrorCode::OutOfLevels,
         "polynomial of degree " + std::to_string(d) + " needs " + std::to_string(poly_depth(d)) +
             " levels but the input is at level " + std::to_string(t.level()) + "; bootstrap it first");
  const auto& ctx = *ev.context();
  if (d == 0) {
    // constant: keep the input's level budget honest
    Ciphertext z = ev.mult_const(t, 0.0, t.level() - 1, ctx.scale_at(t.level() - 1));
    return ev.add_const(z, c[0]);
  }
  Runner run(ev, plan, t);
  const auto lvl = static_cast<std::size_t>(out);
  auto res = run.eval(c, lvl, ctx.scale_at(lvl));
  return *res;
}

Ciphertext eval_poly_bsgs(const Evaluator& ev, const Ciphertext& x, const minimax::MinimaxPoly& p) {
  if (unit_domain(p)) return eval_chebyshev(ev, x, p.cheb_coeffs);
  if (x.level() == 0)
    fail(kModule, ErrorCode::OutOfLevels,
         "polynomial of degree " + std::to_string(p.degree) + " needs " + std::to_string(poly_depth(p)) +
             " levels but the input is at level 0; bootstrap it first");
  const double a = 2.0 / (p.domain_hi - p.domain_lo);
  const double b = -(p.domain_hi + p.domain_lo) / (p.domain_hi - p.domain_lo);
  const auto& ctx = *ev.context();
  Ciphertext t = ev.mult_const(x, a, x.level() - 1, ctx.scale_at(x.level() - 1));
  if (b != 0.0) t = ev.add_const(t, b);
  return eval_chebyshev(ev, t, p.cheb_coeffs);
}

}  // namespace hebert::ckks
