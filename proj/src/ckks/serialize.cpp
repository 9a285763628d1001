#include "hebert/ckks/serialize.hpp"

#include <algorithm>
#include <cmath>

#include "hebert/ckks/context.hpp"
#include "hebert/common/binio.hpp"

namespace hebert::ckks {

namespace {
constexpr const char* kModule = "ckks-core";
using ring::PolyForm;
using ring::RnsPoly;

void put_header(ByteWriter& w, const char* magic, const CkksContext& ctx) {
  w.put_magic(magic);
  w.put<std::uint16_t>(kFormatVersion);
  w.put_bytes(ctx.params_hash());
}

void check_header(ByteReader& r, const char* magic, const CkksContext& ctx) {
  r.expect_magic(magic);
  const auto v = r.get<std::uint16_t>();
  require(v == kFormatVersion, kModule, ErrorCode::Format,
          std::string(magic) + " version " + std::to_string(v) + " not supported");
  const auto h = r.get_bytes(32);
  require(std::equal(h.begin(), h.end(), ctx.params_hash().begin()), kModule, ErrorCode::ParamsMismatch,
          std::string(magic) + " was written under different parameters (hash " +
              to_hex([&] {
                Digest d;
                std::copy(h.begin(), h.end(), d.begin());
                return d;
              }()) +
              ")");
}

void read_limbs(ByteReader& r, RnsPoly& p) {
  for (std::size_t i = 0; i < p.limb_count(); ++i) {
    auto l = p.limb(i);
    r.get_array(l);
    const std::uint64_t q = p.modulus(i).value();
    require(std::all_of(l.begin(), l.end(), [q](std::uint64_t v) { return v < q; }), kModule, ErrorCode::Format,
            "residue out of range");
  }
}

// Self-describing poly for key material: form, limb indices, data.
void put_poly(ByteWriter& w, const RnsPoly& p) {
  w.put<std::uint8_t>(static_cast<std::uint8_t>(p.form()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.limb_count()));
  for (auto m : p.moduli()) w.put<std::uint32_t>(m);
  w.put_array(p.raw());
}

RnsPoly get_poly(ByteReader& r, const CkksContext& ctx) {
  const auto form = r.get<std::uint8_t>();
  require(form <= 1, kModule, ErrorCode::Format, "bad polynomial form");
  const auto n = r.get<std::uint32_t>();
  require(n >= 1 && n <= ctx.ring()->modulus_count(), kModule, ErrorCode::Format, "bad limb count");
  std::vector<std::uint32_t> idx(n);
  for (auto& m : idx) {
    m = r.get<std::uint32_t>();
    require(m < ctx.ring()->modulus_count(), kModule, ErrorCode::Format, "bad modulus index");
  }
  RnsPoly p(ctx.ring(), idx, static_cast<PolyForm>(form));
  read_limbs(r, p);
  return p;
}

void put_switch_key(ByteWriter& w, const SwitchKey& k) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(k.b.size()));
  for (std::size_t j = 0; j < k.b.size(); ++j) {
    put_poly(w, k.b[j]);
    put_poly(w, k.a[j]);
  }
}

SwitchKey get_switch_key(ByteReader& r, const CkksContext& ctx) {
  SwitchKey k;
  const auto n = r.get<std::uint32_t>();
  require(n <= ctx.ring()->modulus_count(), kModule, ErrorCode::Format, "bad digit count");
  for (std::uint32_t j = 0; j < n; ++j) {
    k.b.push_back(get_poly(r, ctx));
    k.a.push_back(get_poly(r, ctx));
  }
  return k;
}

bool has(KeyParts parts, KeyParts bit) { return (static_cast<int>(parts) & static_cast<int>(bit)) != 0; }

}  // namespace

std::vector<std::uint8_t> serialize(const CkksContext& ctx, const Ciphertext& ct) {
  ByteWriter w;
  put_header(w, "CKT1", ctx);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(ct.level()));
  w.put<double>(ct.scale);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ct.slot_count));
  w.put_array(ct.c0.raw());
  w.put_array(ct.c1.raw());
  return w.take();
}

Ciphertext deserialize_ciphertext(const CkksContext& ctx, std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, kModule);
  check_header(r, "CKT1", ctx);
  const auto level = r.get<std::uint8_t>();
  require(level <= ctx.max_level(), kModule, ErrorCode::Format, "ciphertext level beyond the chain");
  Ciphertext ct;
  ct.scale = r.get<double>();
  require(std::isfinite(ct.scale) && ct.scale > 0, kModule, ErrorCode::Format, "bad scale");
  ct.slot_count = r.get<std::uint32_t>();
  require(ct.slot_count >= 1 && ct.slot_count <= ctx.slot_count(), kModule, ErrorCode::Format, "bad slot count");
  ct.c0 = RnsPoly::zero(ctx.ring(), level, PolyForm::Evaluation);
  ct.c1 = RnsPoly::zero(ctx.ring(), level, PolyForm::Evaluation);
  read_limbs(r, ct.c0);
  read_limbs(r, ct.c1);
  require(r.done(), kModule, ErrorCode::Format, "trailing bytes after ciphertext");
  return ct;
}

std::vector<std::uint8_t> serialize(const CkksContext& ctx, const Plaintext& pt) {
  ByteWriter w;
  put_header(w, "CKP1", ctx);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(pt.level()));
  w.put<double>(pt.scale);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(pt.poly.form()));
  w.put_array(pt.poly.raw());
  return w.take();
}

Plaintext deserialize_plaintext(const CkksContext& ctx, std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, kModule);
  check_header(r, "CKP1", ctx);
  const auto level = r.get<std::uint8_t>();
  require(level <= ctx.max_level(), kModule, ErrorCode::Format, "plaintext level beyond the chain");
  Plaintext pt;
  pt.scale = r.get<double>();
  const auto form = r.get<std::uint8_t>();
  require(form <= 1, kModule, ErrorCode::Format, "bad polynomial form");
  pt.poly = RnsPoly::zero(ctx.ring(), level, static_cast<PolyForm>(form));
  read_limbs(r, pt.poly);
  require(r.done(), kModule, ErrorCode::Format, "trailing bytes after plaintext");
  return pt;
}

std::vector<std::uint8_t> serialize(const CkksContext& ctx, const KeySet& keys, KeyParts parts) {
  ByteWriter w;
  put_header(w, "CKK1", ctx);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(parts));
  if (has(parts, KeyParts::Secret)) {
    require(keys.secret.has_value(), kModule, ErrorCode::MissingKey, "no secret key to write");
    put_poly(w, keys.secret->s);
  }
  if (has(parts, KeyParts::Public)) {
    require(keys.pub.has_value(), kModule, ErrorCode::MissingKey, "no public key to write");
    put_poly(w, keys.pub->b);
    put_poly(w, keys.pub->a);
  }
  if (has(parts, KeyParts::Eval)) {
    const auto& e = keys.eval;
    w.put<std::uint8_t>(e.relin ? 1 : 0);
    if (e.relin) put_switch_key(w, *e.relin);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(e.rotation_steps.size()));
    for (auto s : e.rotation_steps) w.put<std::int64_t>(s);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(e.galois.size()));
    for (const auto& [g, k] : e.galois) {
      w.put<std::uint64_t>(g);
      put_switch_key(w, k);
    }
  }
  return w.take();
}

KeySet deserialize_keys(const CkksContext& ctx, std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, kModule);
  check_header(r, "CKK1", ctx);
  const auto parts = static_cast<KeyParts>(r.get<std::uint8_t>());
  require((static_cast<int>(parts) & ~7) == 0, kModule, ErrorCode::Format, "unknown key parts");
  KeySet ks;
  if (has(parts, KeyParts::Secret)) ks.secret = SecretKey{get_poly(r, ctx)};
  if (has(parts, KeyParts::Public)) {
    PublicKey pk;
    pk.b = get_poly(r, ctx);
    pk.a = get_poly(r, ctx);
    ks.pub = std::move(pk);
  }
  if (has(parts, KeyParts::Eval)) {
    if (r.get<std::uint8_t>() != 0) ks.eval.relin = get_switch_key(r, ctx);
    const auto ns = r.get<std::uint32_t>();
    require(ns <= ctx.slot_count() * 2, kModule, ErrorCode::Format, "bad rotation count");
    for (std::uint32_t i = 0; i < ns; ++i) ks.eval.rotation_steps.push_back(r.get<std::int64_t>());
    const auto ng = r.get<std::uint32_t>();
    require(ng <= ctx.slot_count() * 2, kModule, ErrorCode::Format, "bad galois key count");
    for (std::uint32_t i = 0; i < ng; ++i) {
      const auto g = r.get<std::uint64_t>();
      ks.eval.galois.emplace(g, get_switch_key(r, ctx));
    }
  }
  require(r.done(), kModule, ErrorCode::Format, "trailing bytes after key material");
  return ks;
}

std::uint64_t size_report(const CkksParams& params, std::size_t level, std::size_t count) {
  require(level <= params.max_level, kModule, ErrorCode::LevelMismatch,
          "level " + std::to_string(level) + " beyond the chain");
  const std::uint64_t body = 2ull * (level + 1) * params.ring.ring_degree * 8;
  return static_cast<std::uint64_t>(count) * (kCiphertextHeaderBytes + body);
}

}  // namespace hebert::ckks
