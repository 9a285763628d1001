#include "hebert/bootstrap/bootstrap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>

#include "hebert/ckks/crypto.hpp"
#include "hebert/ckks/polyeval.hpp"
#include "hebert/common/error.hpp"

namespace hebert::boot {

namespace {
constexpr const char* kModule = "ckks-bootstrap";
using ckks::CkksContext;

std::int64_t centre(std::int64_t k, std::size_t n) {
  const auto sn = static_cast<std::int64_t>(n);
  k %= sn;
  if (k < 0) k += sn;
  if (k > sn / 2) k -= sn;
  return k;
}

std::vector<cplx> rotated(const std::vector<cplx>& v, std::int64_t r) {
  const std::size_t n = v.size();
  const auto s = static_cast<std::size_t>(((r % static_cast<std::int64_t>(n)) + static_cast<std::int64_t>(n)) %
                                          static_cast<std::int64_t>(n));
  std::vector<cplx> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = v[(j + s) % n];
  return out;
}

struct Builder {
  std::size_t n;
  std::map<std::int64_t, std::vector<cplx>> d;
  std::vector<cplx>& at(std::int64_t k) {
    auto [it, fresh] = d.try_emplace(centre(k, n), std::vector<cplx>(n, 0.0));
    return it->second;
  }
  DiagMatrix finish(std::int64_t stride) {
    DiagMatrix m;
    m.slots = n;
    m.stride = stride;
    for (auto& [k, v] : d)
      if (std::any_of(v.begin(), v.end(), [](cplx c) { return c != 0.0; })) m.diags.emplace_back(k, std::move(v));
    return m;
  }
};

cplx root(const CkksContext& ctx, std::size_t len, std::size_t j, bool inverse) {
  const std::size_t m = 2 * ctx.degree();
  const std::size_t lenq = len << 2, gap = m / lenq;
  const std::size_t r = ctx.rot_group()[j] % lenq;
  return ctx.ksi()[(inverse ? lenq - r : r) * gap];
}

void scale_matrix(DiagMatrix& m, double c) {
  for (auto& [k, v] : m.diags)
    for (auto& x : v) x *= c;
}

// stage lists grouped into `groups` contiguous runs, composed in order
std::vector<DiagMatrix> group_stages(const std::vector<DiagMatrix>& stages, std::size_t groups) {
  groups = std::max<std::size_t>(1, std::min(groups, stages.size()));
  std::vector<DiagMatrix> out;
  std::size_t pos = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t take = (stages.size() - pos) / (groups - g);
    DiagMatrix acc = stages[pos];
    for (std::size_t i = 1; i < take; ++i) acc = compose(stages[pos + i], acc);
    pos += take;
    out.push_back(std::move(acc));
  }
  return out;
}

}  // namespace

std::vector<cplx> DiagMatrix::apply(const std::vector<cplx>& v) const {
  std::vector<cplx> out(v.size(), 0.0);
  for (const auto& [k, d] : diags) {
    const auto r = rotated(v, k);
    for (std::size_t j = 0; j < v.size(); ++j) out[j] += d[j] * r[j];
  }
  return out;
}

DiagMatrix cts_stage(const CkksContext& ctx, std::size_t len) {
  const std::size_t n = ctx.slot_count(), h = len / 2;
  Builder b{n, {}};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = k % len;
    if (p < h) {
      b.at(0)[k] += 1.0;
      b.at(static_cast<std::int64_t>(h))[k] += 1.0;
    } else {
      const cplx w = root(ctx, len, p - h, true);
      b.at(-static_cast<std::int64_t>(h))[k] += w;
      b.at(0)[k] -= w;
    }
  }
  return b.finish(static_cast<std::int64_t>(h));
}

DiagMatrix stc_stage(const CkksContext& ctx, std::size_t len) {
  const std::size_t n = ctx.slot_count(), h = len / 2;
  Builder b{n, {}};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = k % len;
    if (p < h) {
      b.at(0)[k] += 1.0;
      b.at(static_cast<std::int64_t>(h))[k] += root(ctx, len, p, false);
    } else {
      b.at(-static_cast<std::int64_t>(h))[k] += 1.0;
      b.at(0)[k] -= root(ctx, len, p - h, false);
    }
  }
  return b.finish(static_cast<std::int64_t>(h));
}

DiagMatrix compose(const DiagMatrix& a, const DiagMatrix& b) {
  require(a.slots == b.slots, kModule, ErrorCode::InvalidArgument, "slot count mismatch");
  Builder out{a.slots, {}};
  for (const auto& [ka, da] : a.diags)
    for (const auto& [kb, db] : b.diags) {
      const auto rb = rotated(db, ka);
      auto& dst = out.at(ka + kb);
      for (std::size_t j = 0; j < a.slots; ++j) dst[j] += da[j] * rb[j];
    }
  return out.finish(std::min(a.stride, b.stride));
}

BootstrapContext BootstrapContext::create(ckks::CkksContextPtr ctx, const BootstrapConfig& cfg) {
  BootstrapContext bc;
  bc.ctx_ = ctx;
  bc.cfg_ = cfg;
  const std::size_t n = ctx->slot_count();
  require(std::has_single_bit(n) && n >= 2, kModule, ErrorCode::InvalidArgument, "slot count must be a power of two");

  std::vector<DiagMatrix> cts, stc;
  for (std::size_t len = n; len >= 2; len >>= 1) {
    auto s = cts_stage(*ctx, len);
    scale_matrix(s, 0.5);  // 1/n spread over the stages
    cts.push_back(std::move(s));
  }
  for (std::size_t len = 2; len <= n; len <<= 1) stc.push_back(stc_stage(*ctx, len));
  bc.cts_ = group_stages(cts, cfg.cts_groups);
  bc.stc_ = group_stages(stc, cfg.stc_groups);

  bc.evalmod_ = minimax::remez_fit(minimax::evalmod_target(cfg.k_bound, cfg.double_angles), -1, 1, cfg.evalmod_degree);

  require(ctx->max_level() >= bc.consumed_levels() + 1, kModule, ErrorCode::OutOfLevels,
          "preset " + ctx->params().security_preset_name + " has " + std::to_string(ctx->max_level()) +
              " levels; bootstrapping needs " + std::to_string(bc.consumed_levels() + 1));
  return bc;
}

std::size_t BootstrapContext::consumed_levels() const {
  return cts_.size() + 1 + ckks::poly_depth(cfg_.evalmod_degree) + static_cast<std::size_t>(cfg_.double_angles) +
         stc_.size();
}

std::size_t BootstrapContext::output_level() const { return ctx_->max_level() - consumed_levels(); }

double BootstrapContext::input_scale() const {
  return static_cast<double>(ctx_->prime(0)) / std::exp2(cfg_.headroom_bits) / cfg_.message_bound;
}

ckks::KeygenOptions BootstrapContext::keygen_options() const {
  ckks::KeygenOptions o;
  o.rotation_steps = ckks::power_of_two_steps(ctx_->slot_count());
  o.conjugation = true;
  o.relinearization = true;
  return o;
}

Ciphertext mod_raise(const CkksContext& ctx, const Ciphertext& ct) {
  require(ct.level() == 0, kModule, ErrorCode::LevelMismatch, "ModRaise expects a level-0 ciphertext");
  const auto& rc = ctx.ring();
  const std::uint64_t q0 = ctx.prime(0);
  const auto top = rc->chain_indices(ctx.max_level());
  auto lift = [&](const ring::RnsPoly& p) {
    ring::RnsPoly c = p;
    c.intt_inplace();
    std::vector<std::int64_t> s(c.degree());
    auto l = c.limb(0);
    for (std::size_t i = 0; i < s.size(); ++i)
      s[i] = l[i] > q0 / 2 ? static_cast<std::int64_t>(l[i]) - static_cast<std::int64_t>(q0)
                           : static_cast<std::int64_t>(l[i]);
    auto out = ring::from_signed(rc, top, s);
    out.ntt_inplace();
    return out;
  };
  Ciphertext out;
  out.c0 = lift(ct.c0);
  out.c1 = lift(ct.c1);
  out.scale = ct.scale;
  out.slot_count = ct.slot_count;
  out.insecure_provenance = ct.insecure_provenance;
  return out;
}

Ciphertext apply_linear(const ckks::Evaluator& ev, const Ciphertext& ct, const DiagMatrix& m, double out_scale) {
  const auto& ctx = *ev.context();
  require(ct.level() >= 1, kModule, ErrorCode::OutOfLevels, "linear transform needs a level to spend");
  require(!m.diags.empty(), kModule, ErrorCode::InvalidArgument, "empty matrix");
  const std::size_t level = ct.level();
  const std::int64_t stride = m.stride;
  std::int64_t kmin = m.diags.front().first, kmax = kmin;
  for (const auto& [k, d] : m.diags) {
    kmin = std::min(kmin, k);
    kmax = std::max(kmax, k);
  }
  const auto span = static_cast<std::size_t>((kmax - kmin) / stride) + 1;
  const std::size_t g = std::bit_ceil(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(span)))));
  const std::size_t giants = (span + g - 1) / g;

  std::vector<Ciphertext> baby{ct};
  for (std::size_t b = 1; b < std::min(g, span); ++b) baby.push_back(ev.rotate(baby.back(), stride));

  const double pt_scale = out_scale * static_cast<double>(ctx.prime(level)) / ct.scale;
  std::vector<std::optional<Ciphertext>> sums(giants);
  for (const auto& [k, d] : m.diags) {
    const auto i = static_cast<std::size_t>((k - kmin) / stride);
    const std::size_t j = i / g, b = i % g;
    const auto shift = -kmin - static_cast<std::int64_t>(g * j) * stride;
    const auto pt = ckks::encode(ctx, std::span<const cplx>(rotated(d, shift)), level, pt_scale);
    auto term = ev.mult_plain_noscale(baby[b], pt);
    if (sums[j])
      ev.add_inplace(*sums[j], term);
    else
      sums[j] = std::move(term);
  }
  std::optional<Ciphertext> acc;
  const auto giant = static_cast<std::int64_t>(g) * stride;
  for (std::size_t j = giants; j-- > 0;) {
    if (acc) acc = ev.rotate(*acc, giant);
    if (sums[j]) {
      if (acc)
        ev.add_inplace(*acc, *sums[j]);
      else
        acc = *sums[j];
    }
  }
  Ciphertext out = kmin != 0 ? ev.rotate(*acc, kmin) : *acc;
  out = ev.rescale(out);
  out.scale = out_scale;
  return out;
}

Ciphertext bootstrap(const ckks::Evaluator& ev, const BootstrapContext& bc, const Ciphertext& ct,
                     const ckks::SecretKey* audit, double audit_tolerance) {
  const auto& ctx = *bc.context();
  const auto& cfg = bc.config();
  require(ev.context() == bc.context(), kModule, ErrorCode::ParamsMismatch, "evaluator and bootstrap context differ");
  require(ev.keys() && ev.keys()->relin && ev.keys()->has_galois(ckks::galois_for_conjugation(ctx.degree())), kModule,
          ErrorCode::MissingKey, "bootstrap needs relinearisation and conjugation keys");

  Ciphertext x = ct;
  if (x.level() > 0) x = ev.adjust_to(x, 0, bc.input_scale());
  const double delta0 = x.scale;
  const double q0 = static_cast<double>(ctx.prime(0));

  Ciphertext y = mod_raise(ctx, x);
  y.scale = 2.0 * (cfg.k_bound + 1) * q0;

  // CoeffToSlot keeps the raised scale so diagonals encode at full precision
  for (const auto& m : bc.cts_matrices()) y = apply_linear(ev, y, m, y.scale);
  y = ev.mult_const(y, 1.0, y.level() - 1, ctx.scale_at(y.level() - 1));

  const Ciphertext yc = ev.conjugate(y);
  Ciphertext re = ev.add(y, yc);
  Ciphertext im = ev.negate(ev.mult_by_i(ev.sub(y, yc)));

  auto evalmod = [&](const Ciphertext& t) {
    Ciphertext c = ckks::eval_chebyshev(ev, t, bc.evalmod_poly().cheb_coeffs);
    for (int r = 0; r < cfg.double_angles; ++r) c = ev.add_const(ev.mult_int(ev.square(c), 2), -1.0);
    return c;
  };
  re = evalmod(re);
  im = evalmod(im);

  Ciphertext w = ev.add(re, ev.mult_by_i(im));
  // sin(2 pi t/q0) * q0 / (2 pi delta0) recovers the message coefficients
  w.scale = w.scale * 2.0 * std::numbers::pi * delta0 / q0;

  const double stc_target = ctx.scale_at(w.level() - bc.stc_matrices().size());
  const double sratio = std::pow(stc_target / w.scale, 1.0 / static_cast<double>(bc.stc_matrices().size()));
  for (std::size_t g = 0; g < bc.stc_matrices().size(); ++g) {
    const bool last = g + 1 == bc.stc_matrices().size();
    w = apply_linear(ev, w, bc.stc_matrices()[g], last ? stc_target : w.scale * sratio);
  }
  w.insecure_provenance = ct.insecure_provenance;
  w.slot_count = ct.slot_count;

  if (audit) {
    const auto before = ckks::decrypt_complex(ctx, ct, *audit);
    const auto after = ckks::decrypt_complex(ctx, w, *audit);
    double err = 0;
    for (std::size_t i = 0; i < before.size(); ++i) err = std::max(err, std::abs(before[i] - after[i]));
    require(err <= audit_tolerance, kModule, ErrorCode::Precision,
            "bootstrap error " + std::to_string(err) + " exceeds " + std::to_string(audit_tolerance) +
                "; message likely outside the declared bound " + std::to_string(cfg.message_bound));
  }
  return w;
}

Ciphertext debug_refresh(const ckks::CkksContextPtr& ctx, const Ciphertext& ct, const ckks::SecretKey& sk,
                         const ckks::PublicKey& pk, bool enabled, std::optional<std::uint64_t> seed) {
  require(enabled, kModule, ErrorCode::InsecureDisabled,
          "debug_refresh decrypts with the secret key; pass --insecure-debug-refresh to allow it");
  const auto vals = ckks::decrypt_complex(*ctx, ct, sk);
  ckks::Encryptor enc(ctx, pk, seed);
  auto out = enc.encrypt_values(std::span<const cplx>(vals), ctx->max_level());
  out.slot_count = ct.slot_count;
  out.insecure_provenance = true;
  return out;
}

}  // namespace hebert::boot
