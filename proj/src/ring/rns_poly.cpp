#include "hebert/ring/rns_poly.hpp"

#include <algorithm>
#include <bit>

#include "hebert/common/error.hpp"
#include "hebert/common/parallel.hpp"

namespace hebert::ring {

namespace {
constexpr const char* kModule = "ring-arith";
}

RnsPoly::RnsPoly(RingContextPtr ctx, std::vector<std::uint32_t> moduli, PolyForm form)
    : ctx_(std::move(ctx)), moduli_(std::move(moduli)), form_(form) {
  data_.assign(moduli_.size() * ctx_->degree(), 0);
}

RnsPoly RnsPoly::zero(RingContextPtr ctx, std::size_t level, PolyForm form) {
  auto idx = ctx->chain_indices(level);
  return RnsPoly(std::move(ctx), std::move(idx), form);
}

std::size_t RnsPoly::level() const {
  std::size_t chain = 0;
  for (auto m : moduli_)
    if (!ctx_->is_special(m)) ++chain;
  require(chain > 0, kModule, ErrorCode::LevelMismatch, "polynomial has no chain limbs");
  return chain - 1;
}

bool RnsPoly::has_special() const {
  return std::any_of(moduli_.begin(), moduli_.end(), [&](auto m) { return ctx_->is_special(m); });
}

void RnsPoly::ntt_inplace() {
  require(form_ == PolyForm::Coefficient, kModule, ErrorCode::FormMismatch, "forward NTT needs coefficient form");
  parallel_for(limb_count(), [&](std::size_t i) { ctx_->ntt(moduli_[i]).forward(limb(i)); });
  form_ = PolyForm::Evaluation;
}

void RnsPoly::intt_inplace() {
  require(form_ == PolyForm::Evaluation, kModule, ErrorCode::FormMismatch, "inverse NTT needs evaluation form");
  parallel_for(limb_count(), [&](std::size_t i) { ctx_->ntt(moduli_[i]).inverse(limb(i)); });
  form_ = PolyForm::Coefficient;
}

void RnsPoly::check_compatible(const RnsPoly& o, const char* what) const {
  if (moduli_ != o.moduli_)
    fail(kModule, ErrorCode::LevelMismatch, std::string(what) + ": operands live over different moduli");
  if (form_ != o.form_) fail(kModule, ErrorCode::FormMismatch, std::string(what) + ": operands differ in form");
}

void RnsPoly::add_inplace(const RnsPoly& o) {
  check_compatible(o, "add");
  parallel_for(limb_count(), [&](std::size_t i) {
    const auto& q = modulus(i);
    auto a = limb(i);
    auto b = o.limb(i);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = q.add(a[j], b[j]);
  });
}

void RnsPoly::sub_inplace(const RnsPoly& o) {
  check_compatible(o, "sub");
  parallel_for(limb_count(), [&](std::size_t i) {
    const auto& q = modulus(i);
    auto a = limb(i);
    auto b = o.limb(i);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = q.sub(a[j], b[j]);
  });
}

void RnsPoly::negate_inplace() {
  parallel_for(limb_count(), [&](std::size_t i) {
    const auto& q = modulus(i);
    for (auto& v : limb(i)) v = q.neg(v);
  });
}

void RnsPoly::mul_inplace(const RnsPoly& o) {
  check_compatible(o, "mul");
  require(form_ == PolyForm::Evaluation, kModule, ErrorCode::FormMismatch, "mul needs evaluation form");
  parallel_for(limb_count(), [&](std::size_t i) {
    const auto& q = modulus(i);
    auto a = limb(i);
    auto b = o.limb(i);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = q.mul(a[j], b[j]);
  });
}

void RnsPoly::fma_inplace(const RnsPoly& x, const RnsPoly& y) {
  check_compatible(x, "fma");
  check_compatible(y, "fma");
  require(form_ == PolyForm::Evaluation, kModule, ErrorCode::FormMismatch, "fma needs evaluation form");
  parallel_for(limb_count(), [&](std::size_t i) {
    const auto& q = modulus(i);
    auto a = limb(i);
    auto b = x.limb(i);
    auto c = y.limb(i);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = q.add(a[j], q.mul(b[j], c[j]));
  });
}

void RnsPoly::mul_scalar_inplace(std::span<const std::uint64_t> scalars) {
  require(scalars.size() == limb_count(), kModule, ErrorCode::InvalidArgument, "one scalar per limb expected");
  parallel_for(limb_count(), [&](std::size_t i) {
    const auto& q = modulus(i);
    const std::uint64_t s = scalars[i];
    const std::uint64_t ss = q.shoup(s);
    for (auto& v : limb(i)) v = q.mul_shoup(v, s, ss);
  });
}

void RnsPoly::mul_scalar_inplace(std::uint64_t s) {
  std::vector<std::uint64_t> per(limb_count());
  for (std::size_t i = 0; i < per.size(); ++i) per[i] = modulus(i).reduce(s);
  mul_scalar_inplace(per);
}

void RnsPoly::drop_to_level(std::size_t level) {
  std::vector<std::uint32_t> keep;
  for (auto m : moduli_)
    if (!ctx_->is_special(m) && m <= level) keep.push_back(m);
  require(keep.size() == level + 1, kModule, ErrorCode::LevelMismatch, "cannot drop to a level above the current one");
  *this = restricted(keep);
}

RnsPoly RnsPoly::restricted(const std::vector<std::uint32_t>& moduli) const {
  RnsPoly out(ctx_, moduli, form_);
  for (std::size_t i = 0; i < moduli.size(); ++i) {
    auto it = std::find(moduli_.begin(), moduli_.end(), moduli[i]);
    require(it != moduli_.end(), kModule, ErrorCode::LevelMismatch, "restriction to a modulus not present");
    auto src = limb(static_cast<std::size_t>(it - moduli_.begin()));
    std::copy(src.begin(), src.end(), out.limb(i).begin());
  }
  return out;
}

std::vector<std::uint32_t> galois_permutation(std::size_t n, std::uint64_t galois) {
  const int logn = std::countr_zero(n);
  const std::uint64_t two_n = 2 * n;
  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t e = 2 * reverse_bits(static_cast<std::uint32_t>(i), logn) + 1;
    const std::uint64_t e2 = (e * galois) % two_n;
    perm[i] = reverse_bits(static_cast<std::uint32_t>((e2 - 1) / 2), logn);
  }
  return perm;
}

RnsPoly RnsPoly::automorphism(std::uint64_t galois) const {
  const std::size_t n = degree();
  require(galois % 2 == 1, kModule, ErrorCode::InvalidArgument, "galois element must be odd");
  RnsPoly out(ctx_, moduli_, form_);
  if (form_ == PolyForm::Evaluation) {
    const auto perm = galois_permutation(n, galois);
    parallel_for(limb_count(), [&](std::size_t i) {
      auto src = limb(i);
      auto dst = out.limb(i);
      for (std::size_t j = 0; j < n; ++j) dst[j] = src[perm[j]];
    });
  } else {
    const std::uint64_t two_n = 2 * n;
    parallel_for(limb_count(), [&](std::size_t i) {
      const auto& q = modulus(i);
      auto src = limb(i);
      auto dst = out.limb(i);
      for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t pos = (k * galois) % two_n;
        if (pos < n)
          dst[pos] = src[k];
        else
          dst[pos - n] = q.neg(src[k]);
      }
    });
  }
  return out;
}

RnsPoly ntt_transform(const RnsPoly& p, NttDirection direction) {
  RnsPoly out = p;
  if (direction == NttDirection::Forward)
    out.ntt_inplace();
  else
    out.intt_inplace();
  return out;
}

RnsPoly poly_mul(const RnsPoly& a, const RnsPoly& b) {
  RnsPoly out = a;
  out.mul_inplace(b);
  return out;
}

RnsPoly poly_add(const RnsPoly& a, const RnsPoly& b) {
  RnsPoly out = a;
  out.add_inplace(b);
  return out;
}

RnsPoly poly_sub(const RnsPoly& a, const RnsPoly& b) {
  RnsPoly out = a;
  out.sub_inplace(b);
  return out;
}

RnsPoly from_signed(RingContextPtr ctx, const std::vector<std::uint32_t>& moduli, std::span<const std::int64_t> coeffs) {
  RnsPoly out(ctx, moduli, PolyForm::Coefficient);
  require(coeffs.size() == out.degree(), kModule, ErrorCode::InvalidArgument, "coefficient count must equal N");
  for (std::size_t i = 0; i < out.limb_count(); ++i) {
    const auto& q = out.modulus(i);
    auto dst = out.limb(i);
    for (std::size_t j = 0; j < coeffs.size(); ++j) dst[j] = q.from_signed(coeffs[j]);
  }
  return out;
}

}  // namespace hebert::ring
