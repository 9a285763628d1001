#include "hebert/ckks/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "hebert/common/error.hpp"
#include "hebert/common/parallel.hpp"

namespace hebert::ckks {

using ring::PolyForm;
using ring::RnsPoly;
using ring::u128;

namespace {
constexpr const char* kModule = "ckks-core";
constexpr double kScaleTolerance = 0x1p-10;

bool scales_match(double a, double b) { return std::abs(a / b - 1.0) < kScaleTolerance; }

void require_level(const Ciphertext& a, const char* op) {
  if (a.level() == 0)
    fail(kModule, ErrorCode::OutOfLevels,
         std::string(op) + " needs level >= 1 but the ciphertext is at level 0; bootstrap it first");
}

std::uint64_t residue_of(long double c, const ring::Modulus& q) {
  const bool neg = c < 0;
  if (neg) c = -c;
  std::uint64_t r;
  if (c < 0x1p62L) {
    r = q.reduce(static_cast<std::uint64_t>(c));
  } else {
    const long double hi = std::floor(c / 0x1p62L);
    const long double lo = c - hi * 0x1p62L;
    r = q.add(q.mul(q.reduce(static_cast<std::uint64_t>(hi)), q.reduce(std::uint64_t{1} << 62)),
              q.reduce(static_cast<std::uint64_t>(lo)));
  }
  return neg ? q.neg(r) : r;
}

std::vector<std::uint64_t> const_residues(const RnsPoly& p, long double c) {
  std::vector<std::uint64_t> r(p.limb_count());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = residue_of(c, p.modulus(i));
  return r;
}

}  // namespace

Evaluator::Evaluator(CkksContextPtr ctx, const EvalKeys* keys) : ctx_(std::move(ctx)), keys_(keys) {}

Ciphertext trivial_ciphertext(const CkksContext& ctx, const Plaintext& pt) {
  Ciphertext ct;
  ct.c0 = pt.poly;
  ct.c1 = RnsPoly(ctx.ring(), pt.poly.moduli(), PolyForm::Evaluation);
  ct.scale = pt.scale;
  ct.slot_count = ctx.slot_count();
  return ct;
}

void Evaluator::align(Ciphertext& a, Ciphertext& b) const {
  if (a.level() > b.level())
    a = scales_match(a.scale, b.scale) ? mod_down(a, b.level()) : adjust_to(a, b.level(), b.scale);
  else if (b.level() > a.level())
    b = scales_match(a.scale, b.scale) ? mod_down(b, a.level()) : adjust_to(b, a.level(), a.scale);
  if (!scales_match(a.scale, b.scale))
    fail(kModule, ErrorCode::ScaleMismatch,
         "operand scales differ: " + std::to_string(std::log2(a.scale)) + " vs " + std::to_string(std::log2(b.scale)) +
             " bits");
}

Ciphertext Evaluator::add(const Ciphertext& a, const Ciphertext& b) const {
  Ciphertext x = a, y = b;
  align(x, y);
  x.c0.add_inplace(y.c0);
  x.c1.add_inplace(y.c1);
  x.insecure_provenance |= y.insecure_provenance;
  return x;
}

Ciphertext Evaluator::sub(const Ciphertext& a, const Ciphertext& b) const {
  Ciphertext x = a, y = b;
  align(x, y);
  x.c0.sub_inplace(y.c0);
  x.c1.sub_inplace(y.c1);
  x.insecure_provenance |= y.insecure_provenance;
  return x;
}

void Evaluator::add_inplace(Ciphertext& a, const Ciphertext& b) const {
  if (a.level() == b.level() && scales_match(a.scale, b.scale)) {
    a.c0.add_inplace(b.c0);
    a.c1.add_inplace(b.c1);
    a.insecure_provenance |= b.insecure_provenance;
  } else {
    a = add(a, b);
  }
}

void Evaluator::sub_inplace(Ciphertext& a, const Ciphertext& b) const {
  if (a.level() == b.level() && scales_match(a.scale, b.scale)) {
    a.c0.sub_inplace(b.c0);
    a.c1.sub_inplace(b.c1);
    a.insecure_provenance |= b.insecure_provenance;
  } else {
    a = sub(a, b);
  }
}

Ciphertext Evaluator::negate(const Ciphertext& a) const {
  Ciphertext x = a;
  x.c0.negate_inplace();
  x.c1.negate_inplace();
  return x;
}

Ciphertext Evaluator::add_plain(const Ciphertext& a, const Plaintext& p) const {
  require(p.level() >= a.level(), kModule, ErrorCode::LevelMismatch, "plaintext below ciphertext level");
  if (!scales_match(a.scale, p.scale)) fail(kModule, ErrorCode::ScaleMismatch, "plaintext scale differs");
  Ciphertext x = a;
  x.c0.add_inplace(p.poly.restricted(a.c0.moduli()));
  return x;
}

Ciphertext Evaluator::add_const(const Ciphertext& a, cplx c) const {
  Ciphertext x = a;
  if (c.imag() != 0.0) {
    const auto pt = encode_constant(*ctx_, c, a.level(), a.scale);
    x.c0.add_inplace(pt.poly);
    return x;
  }
  const auto r = const_residues(x.c0, std::round(static_cast<long double>(c.real()) * a.scale));
  for (std::size_t i = 0; i < x.c0.limb_count(); ++i) {
    const auto& q = x.c0.modulus(i);
    for (auto& v : x.c0.limb(i)) v = q.add(v, r[i]);
  }
  return x;
}

Ciphertext Evaluator::mult(const Ciphertext& a, const Ciphertext& b) const {
  require_level(a, "mult");
  require_level(b, "mult");
  require(keys_ && keys_->relin, kModule, ErrorCode::MissingKey, "mult needs a relinearisation key");
  Ciphertext x = a, y = b;
  if (x.level() > y.level()) x = mod_down(x, y.level());
  if (y.level() > x.level()) y = mod_down(y, x.level());

  RnsPoly d0 = ring::poly_mul(x.c0, y.c0);
  RnsPoly d1 = ring::poly_mul(x.c0, y.c1);
  d1.fma_inplace(x.c1, y.c0);
  RnsPoly d2 = ring::poly_mul(x.c1, y.c1);
  auto [k0, k1] = key_switch(d2, *keys_->relin);
  d0.add_inplace(k0);
  d1.add_inplace(k1);

  Ciphertext out;
  out.c0 = std::move(d0);
  out.c1 = std::move(d1);
  out.scale = x.scale * y.scale;
  out.slot_count = x.slot_count;
  out.insecure_provenance = x.insecure_provenance || y.insecure_provenance;
  return rescale(out);
}

Ciphertext Evaluator::square(const Ciphertext& a) const { return mult(a, a); }

Ciphertext Evaluator::mult_plain_noscale(const Ciphertext& a, const Plaintext& p) const {
  require(p.level() >= a.level(), kModule, ErrorCode::LevelMismatch, "plaintext below ciphertext level");
  const RnsPoly pp = p.level() == a.level() ? p.poly : p.poly.restricted(a.c0.moduli());
  Ciphertext x = a;
  x.c0.mul_inplace(pp);
  x.c1.mul_inplace(pp);
  x.scale = a.scale * p.scale;
  return x;
}

Ciphertext Evaluator::mult_plain(const Ciphertext& a, const Plaintext& p) const {
  require_level(a, "mult_plain");
  return rescale(mult_plain_noscale(a, p));
}

Ciphertext Evaluator::mult_values(const Ciphertext& a, std::span<const cplx> values, double out_scale) const {
  require_level(a, "mult_values");
  const std::size_t l = a.level();
  if (out_scale <= 0) out_scale = ctx_->scale_at(l - 1);
  const double pt_scale = out_scale * static_cast<double>(ctx_->prime(l)) / a.scale;
  auto pt = encode(*ctx_, values, l, pt_scale);
  Ciphertext out = rescale(mult_plain_noscale(a, pt));
  out.scale = out_scale;
  return out;
}

Ciphertext Evaluator::mult_values(const Ciphertext& a, std::span<const double> values, double out_scale) const {
  std::vector<cplx> c(values.begin(), values.end());
  return mult_values(a, c, out_scale);
}

Ciphertext Evaluator::mult_const_noscale(const Ciphertext& a, cplx c, double const_scale) const {
  Ciphertext x = a;
  if (c.imag() != 0.0) {
    const auto pt = encode_constant(*ctx_, c, a.level(), const_scale);
    x.c0.mul_inplace(pt.poly);
    x.c1.mul_inplace(pt.poly);
  } else {
    const auto r = const_residues(x.c0, std::round(static_cast<long double>(c.real()) * const_scale));
    x.c0.mul_scalar_inplace(r);
    x.c1.mul_scalar_inplace(r);
  }
  x.scale = a.scale * const_scale;
  return x;
}

Ciphertext Evaluator::mult_const(const Ciphertext& a, double c, std::size_t out_level, double out_scale) const {
  if (a.level() <= out_level)
    fail(kModule, ErrorCode::OutOfLevels,
         "constant product needs level > " + std::to_string(out_level) + " but input is at level " +
             std::to_string(a.level()) + "; bootstrap it first");
  Ciphertext x = a.level() == out_level + 1 ? a : mod_down(a, out_level + 1);
  const double cs = out_scale * static_cast<double>(ctx_->prime(out_level + 1)) / x.scale;
  Ciphertext out = rescale(mult_const_noscale(x, c, cs));
  out.scale = out_scale;
  return out;
}

Ciphertext Evaluator::mult_const(const Ciphertext& a, double c) const {
  require_level(a, "mult_const");
  return mult_const(a, c, a.level() - 1, ctx_->scale_at(a.level() - 1));
}

Ciphertext Evaluator::mult_int(const Ciphertext& a, std::int64_t k) const {
  Ciphertext x = a;
  const auto r = const_residues(x.c0, static_cast<long double>(k));
  x.c0.mul_scalar_inplace(r);
  x.c1.mul_scalar_inplace(r);
  return x;
}

Ciphertext Evaluator::mult_by_i(const Ciphertext& a) const {
  Ciphertext x = a;
  for (RnsPoly* p : {&x.c0, &x.c1}) {
    parallel_for(p->limb_count(), [&](std::size_t i) {
      const auto& q = p->modulus(i);
      const auto t = ctx_->imag_unit_ntt(p->modulus_index(i));
      auto v = p->limb(i);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = q.mul(v[k], t[k]);
    });
  }
  return x;
}

Ciphertext Evaluator::rescale(const Ciphertext& a) const {
  require_level(a, "rescale");
  const std::size_t l = a.level();
  const auto& rc = ctx_->ring();
  const auto keep = rc->chain_indices(l - 1);
  const auto& ql = rc->modulus(l);
  Ciphertext out;
  for (int half = 0; half < 2; ++half) {
    const RnsPoly& src = half == 0 ? a.c0 : a.c1;
    RnsPoly last = src.restricted({static_cast<std::uint32_t>(l)});
    last.intt_inplace();
    RnsPoly res = src.restricted(keep);
    const auto lastv = last.limb(0);
    parallel_for(keep.size(), [&](std::size_t i) {
      const auto& q = rc->modulus(keep[i]);
      std::vector<std::uint64_t> t(lastv.size());
      for (std::size_t k = 0; k < t.size(); ++k) t[k] = q.from_signed(ql.to_signed(lastv[k]));
      rc->ntt(keep[i]).forward(t);
      const std::uint64_t inv = q.inv(q.reduce(ql.value()));
      const std::uint64_t inv_s = q.shoup(inv);
      auto v = res.limb(i);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = q.mul_shoup(q.sub(v[k], t[k]), inv, inv_s);
    });
    (half == 0 ? out.c0 : out.c1) = std::move(res);
  }
  out.scale = a.scale / static_cast<double>(ql.value());
  out.slot_count = a.slot_count;
  out.insecure_provenance = a.insecure_provenance;
  return out;
}

Ciphertext Evaluator::mod_down(const Ciphertext& a, std::size_t level) const {
  require(level <= a.level(), kModule, ErrorCode::LevelMismatch, "mod_down target above current level");
  if (level == a.level()) return a;
  Ciphertext x = a;
  x.c0.drop_to_level(level);
  x.c1.drop_to_level(level);
  return x;
}

Ciphertext Evaluator::adjust_to(const Ciphertext& a, std::size_t level, double scale) const {
  if (level == a.level() && scales_match(a.scale, scale)) return a;
  return mult_const(a, 1.0, level, scale);
}

Ciphertext Evaluator::to_level(const Ciphertext& a, std::size_t level) const {
  return adjust_to(a, level, ctx_->scale_at(level));
}

// ---- key switching ----

RnsPoly basis_convert(const RnsPoly& src, const std::vector<std::uint32_t>& targets, bool exact_centered) {
  const auto& rc = src.context();
  const std::size_t na = src.limb_count();
  const std::size_t n = src.degree();
  std::vector<std::uint64_t> qhat_inv(na);
  for (std::size_t i = 0; i < na; ++i) {
    const auto& qi = src.modulus(i);
    std::uint64_t prod = 1;
    for (std::size_t k = 0; k < na; ++k)
      if (k != i) prod = qi.mul(prod, qi.reduce(src.modulus(k).value()));
    qhat_inv[i] = qi.inv(prod);
  }
  // y_i = x_i * qhat_i^{-1} mod q_i
  std::vector<std::uint64_t> y(na * n);
  for (std::size_t i = 0; i < na; ++i) {
    const auto& qi = src.modulus(i);
    const std::uint64_t w = qhat_inv[i], ws = qi.shoup(w);
    auto x = src.limb(i);
    for (std::size_t k = 0; k < n; ++k) y[i * n + k] = qi.mul_shoup(x[k], w, ws);
  }
  // v = round(sum y_i / q_i) turns the sum into the centred representative
  std::vector<std::uint64_t> v;
  if (exact_centered) {
    v.resize(n);
    std::vector<long double> inv_q(na);
    for (std::size_t i = 0; i < na; ++i) inv_q[i] = 1.0L / static_cast<long double>(src.modulus(i).value());
    for (std::size_t k = 0; k < n; ++k) {
      long double f = 0;
      for (std::size_t i = 0; i < na; ++i) f += static_cast<long double>(y[i * n + k]) * inv_q[i];
      v[k] = static_cast<std::uint64_t>(std::llround(f));
    }
  }
  RnsPoly out(rc, targets, PolyForm::Coefficient);
  parallel_for(targets.size(), [&](std::size_t t) {
    const auto& qb = out.modulus(t);
    std::vector<std::uint64_t> qhat(na);
    for (std::size_t i = 0; i < na; ++i) {
      std::uint64_t prod = 1;
      for (std::size_t k = 0; k < na; ++k)
        if (k != i) prod = qb.mul(prod, qb.reduce(src.modulus(k).value()));
      qhat[i] = prod;
    }
    std::uint64_t prod_mod = 1;
    for (std::size_t i = 0; i < na; ++i) prod_mod = qb.mul(prod_mod, qb.reduce(src.modulus(i).value()));
    auto dst = out.limb(t);
    for (std::size_t k = 0; k < n; ++k) {
      u128 acc = 0;
      for (std::size_t i = 0; i < na; ++i) acc += static_cast<u128>(y[i * n + k]) * qhat[i];
      dst[k] = qb.reduce128(acc);
      if (exact_centered) dst[k] = qb.sub(dst[k], qb.mul(qb.reduce(v[k]), prod_mod));
    }
  });
  return out;
}

std::pair<RnsPoly, RnsPoly> Evaluator::key_switch(const RnsPoly& d, const SwitchKey& key) const {
  require(d.form() == PolyForm::Evaluation, kModule, ErrorCode::FormMismatch, "key switch input must be NTT form");
  const auto& rc = ctx_->ring();
  const std::size_t l = d.level();
  const auto ext = rc->extended_indices(l);
  const auto specials = rc->special_indices();
  RnsPoly dc = d;
  dc.intt_inplace();

  RnsPoly acc0(rc, ext, PolyForm::Evaluation), acc1(rc, ext, PolyForm::Evaluation);
  for (std::size_t j = 0; j < ctx_->digit_count(l); ++j) {
    const auto digit = ctx_->digit_indices(j, l);
    std::vector<std::uint32_t> others;
    for (auto m : ext)
      if (std::find(digit.begin(), digit.end(), m) == digit.end()) others.push_back(m);
    RnsPoly up = basis_convert(dc.restricted(digit), others);
    up.ntt_inplace();
    const auto& kb = key.b[j];
    const auto& ka = key.a[j];
    parallel_for(ext.size(), [&](std::size_t pos) {
      const std::uint32_t m = ext[pos];
      const auto& q = rc->modulus(m);
      std::span<const std::uint64_t> src;
      if (m <= l && m >= digit.front() && m <= digit.back())
        src = d.limb(m);
      else
        src = up.limb(static_cast<std::size_t>(std::find(others.begin(), others.end(), m) - others.begin()));
      const auto b = kb.limb(m);
      const auto a = ka.limb(m);
      auto o0 = acc0.limb(pos);
      auto o1 = acc1.limb(pos);
      for (std::size_t k = 0; k < src.size(); ++k) {
        o0[k] = q.add(o0[k], q.mul(src[k], b[k]));
        o1[k] = q.add(o1[k], q.mul(src[k], a[k]));
      }
    });
  }

  // divide by P
  auto mod_down_p = [&](const RnsPoly& acc) {
    RnsPoly sp = acc.restricted(specials);
    sp.intt_inplace();
    RnsPoly conv = basis_convert(sp, rc->chain_indices(l), true);
    conv.ntt_inplace();
    RnsPoly out = acc.restricted(rc->chain_indices(l));
    parallel_for(l + 1, [&](std::size_t i) {
      const auto& q = rc->modulus(i);
      const std::uint64_t pinv = ctx_->p_inv_mod(i), pinv_s = q.shoup(pinv);
      auto v = out.limb(i);
      auto c = conv.limb(i);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = q.mul_shoup(q.sub(v[k], c[k]), pinv, pinv_s);
    });
    return out;
  };
  return {mod_down_p(acc0), mod_down_p(acc1)};
}

Ciphertext Evaluator::apply_galois(const Ciphertext& a, std::uint64_t galois) const {
  require(keys_ != nullptr, kModule, ErrorCode::MissingKey, "no evaluation keys");
  auto it = keys_->galois.find(galois);
  if (it == keys_->galois.end())
    fail(kModule, ErrorCode::MissingKey, "no key for galois element " + std::to_string(galois));
  Ciphertext out;
  out.c0 = a.c0.automorphism(galois);
  RnsPoly d = a.c1.automorphism(galois);
  auto [k0, k1] = key_switch(d, it->second);
  out.c0.add_inplace(k0);
  out.c1 = std::move(k1);
  out.scale = a.scale;
  out.slot_count = a.slot_count;
  out.insecure_provenance = a.insecure_provenance;
  return out;
}

std::vector<std::int64_t> Evaluator::rotation_plan(std::int64_t step) const {
  const auto n = static_cast<std::int64_t>(ctx_->slot_count());
  std::int64_t k = step % n;
  if (k < 0) k += n;
  if (k == 0) return {};
  auto have = [&](std::int64_t s) { return keys_ && keys_->has_galois(galois_for_step(s, ctx_->degree())); };
  if (have(k)) return {k};
  // signed binary (NAF) over the centred representative
  std::int64_t c = k > n / 2 ? k - n : k;
  std::vector<std::int64_t> plan;
  bool ok = true;
  for (std::int64_t bit = 1; c != 0; bit <<= 1) {
    if (c & 1) {
      const std::int64_t digit = (c & 3) == 3 ? -1 : 1;
      plan.push_back(digit * bit);
      c -= digit;
      ok = ok && have(digit * bit);
    }
    c >>= 1;
  }
  if (ok) return plan;
  plan.clear();
  for (std::int64_t bit = 1; bit <= k; bit <<= 1)
    if (k & bit) {
      if (!have(bit)) fail(kModule, ErrorCode::MissingKey, "no rotation keys compose step " + std::to_string(step));
      plan.push_back(bit);
    }
  return plan;
}

bool Evaluator::can_rotate(std::int64_t step) const {
  try {
    (void)rotation_plan(step);
    return true;
  } catch (const Error&) {
    return false;
  }
}

Ciphertext Evaluator::rotate(const Ciphertext& a, std::int64_t step) const {
  Ciphertext x = a;
  for (auto s : rotation_plan(step)) x = apply_galois(x, galois_for_step(s, ctx_->degree()));
  return x;
}

Ciphertext Evaluator::conjugate(const Ciphertext& a) const {
  return apply_galois(a, galois_for_conjugation(ctx_->degree()));
}

}  // namespace hebert::ckks
