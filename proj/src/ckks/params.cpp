#include "hebert/ckks/params.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hebert/common/error.hpp"

namespace hebert::ckks {

namespace {
constexpr const char* kModule = "ckks-core";
constexpr const char* kHeader = "hebert-ckks-params v1";

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}
}  // namespace

void CkksParams::validate() const {
  ring.validate();
  require(slot_count == ring.ring_degree / 2, kModule, ErrorCode::InvalidArgument, "slot_count must be N/2");
  require(max_level + 1 == ring.moduli_chain.size(), kModule, ErrorCode::InvalidArgument,
          "max_level + 1 must equal the chain length");
  require(default_scale > 1 && std::isfinite(default_scale), kModule, ErrorCode::InvalidArgument, "bad scale");
  require(!ring.special_moduli.empty(), kModule, ErrorCode::InvalidArgument, "key switching needs special primes");
  require(error_sigma > 0, kModule, ErrorCode::InvalidArgument, "sigma must be positive");
  if (secret_dist == SecretDist::Sparse)
    require(hamming_weight > 0 && hamming_weight <= ring.ring_degree, kModule, ErrorCode::InvalidArgument,
            "bad hamming weight");
}

std::string CkksParams::to_text() const {
  std::ostringstream os;
  os << kHeader << "\n";
  os << "preset " << security_preset_name << "\n";
  os << "default_scale " << hexfloat(default_scale) << "\n";
  os << "secret " << (secret_dist == SecretDist::Sparse ? "sparse " : "ternary ") << hamming_weight << "\n";
  os << "error_sigma " << hexfloat(error_sigma) << "\n";
  os << ring.to_text();
  return os.str();
}

CkksParams CkksParams::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kHeader, kModule, ErrorCode::Format,
          "missing ckks params header");
  CkksParams p;
  std::string ring_text;
  bool in_ring = false;
  while (std::getline(in, line)) {
    if (line.rfind("hebert-ring-params", 0) == 0) in_ring = true;
    if (in_ring) {
      ring_text += line + "\n";
      continue;
    }
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "preset") {
      ls >> p.security_preset_name;
    } else if (key == "default_scale") {
      std::string v;
      ls >> v;
      p.default_scale = std::strtod(v.c_str(), nullptr);
    } else if (key == "secret") {
      std::string kind;
      ls >> kind >> p.hamming_weight;
      p.secret_dist = kind == "sparse" ? SecretDist::Sparse : SecretDist::Ternary;
    } else if (key == "error_sigma") {
      std::string v;
      ls >> v;
      p.error_sigma = std::strtod(v.c_str(), nullptr);
    }
  }
  require(in_ring, kModule, ErrorCode::Format, "params text lacks a ring section");
  p.ring = ring::RingParams::from_text(ring_text);
  p.max_level = p.ring.moduli_chain.size() - 1;
  p.slot_count = p.ring.ring_degree / 2;
  p.validate();
  return p;
}

Digest CkksParams::hash() const { return sha256(to_text()); }

CkksParams make_params(ring::RingParams ring, double scale, SecretDist dist, std::size_t hamming_weight,
                       double sigma) {
  CkksParams p;
  p.security_preset_name = ring.name;
  p.max_level = ring.moduli_chain.size() - 1;
  p.slot_count = ring.ring_degree / 2;
  p.ring = std::move(ring);
  p.default_scale = scale;
  p.secret_dist = dist;
  p.hamming_weight = hamming_weight;
  p.error_sigma = sigma;
  p.validate();
  return p;
}

std::vector<std::uint64_t> scale_stable_chain(std::size_t ring_degree, int q0_bits, std::size_t levels, double scale,
                                              const std::vector<std::uint64_t>& exclude) {
  std::vector<std::uint64_t> used = exclude;
  const auto q0 = ring::primes_below(q0_bits, ring_degree, 1, used)[0];
  used.push_back(q0);
  std::vector<std::uint64_t> top_down;
  double s = scale;
  for (std::size_t l = levels; l >= 1; --l) {
    const auto q = ring::prime_nearest(s * s / scale, ring_degree, used);
    used.push_back(q);
    top_down.push_back(q);
    s = s * s / static_cast<double>(q);
  }
  std::vector<std::uint64_t> chain{q0};
  chain.insert(chain.end(), top_down.rbegin(), top_down.rend());
  return chain;
}

// Stable chain below, then `wide` big primes on top. The top scales follow
// S_l = sqrt(q_l S_{l-1}) so squaring and rescaling still lands on S_{l-1}.
std::pair<std::vector<std::uint64_t>, double> widened_chain(std::size_t ring_degree, int q0_bits, std::size_t levels,
                                                            double scale, std::size_t wide, int wide_bits,
                                                            const std::vector<std::uint64_t>& exclude) {
  require(wide < levels, kModule, ErrorCode::InvalidArgument, "too many wide levels");
  auto chain = scale_stable_chain(ring_degree, q0_bits, levels - wide, scale, exclude);
  std::vector<std::uint64_t> used = exclude;
  used.insert(used.end(), chain.begin(), chain.end());
  const auto big = ring::primes_below(wide_bits, ring_degree, wide, used);
  double s = scale;
  for (auto q : big) {
    chain.push_back(q);
    s = std::sqrt(static_cast<double>(q) * s);
  }
  return {chain, s};
}

std::vector<double> canonical_scales(const CkksParams& p) {
  std::vector<double> s(p.max_level + 1);
  s[p.max_level] = p.default_scale;
  for (std::size_t l = p.max_level; l >= 1; --l)
    s[l - 1] = s[l] * s[l] / static_cast<double>(p.ring.moduli_chain[l]);
  return s;
}

std::vector<std::string> preset_names() { return {"desk", "desk-boot", "paper"}; }

CkksParams generate_preset(std::string_view name) {
  const double delta = 0x1p40;
  ring::RingParams r;
  r.name = std::string(name);
  if (name == "desk") {
    r.ring_degree = 1 << 13;
    r.special_moduli = ring::primes_below(61, r.ring_degree, 3);
    r.moduli_chain = scale_stable_chain(r.ring_degree, 50, 8, delta, r.special_moduli);
    return make_params(r, delta);
  }
  if (name == "desk-boot") {
    r.ring_degree = 1 << 13;
    r.special_moduli = ring::primes_below(61, r.ring_degree, 6);
    // the top three levels carry the CoeffToSlot diagonals
    auto [chain, top_scale] = widened_chain(r.ring_degree, 55, 24, 0x1p45, 3, 60, r.special_moduli);
    r.moduli_chain = std::move(chain);
    return make_params(r, top_scale, SecretDist::Sparse, 64);
  }
  if (name == "paper") {
    r.ring_degree = 1 << 17;
    auto sp = ring::primes_below(54, r.ring_degree, 2);
    auto sp53 = ring::primes_below(53, r.ring_degree, 4);
    sp.insert(sp.end(), sp53.begin(), sp53.end());
    r.special_moduli = sp;
    r.moduli_chain = scale_stable_chain(r.ring_degree, 60, 29, delta, r.special_moduli);
    return make_params(r, delta);
  }
  fail(kModule, ErrorCode::InvalidArgument, "unknown preset " + std::string(name));
}

std::string preset_directory() {
  if (const char* env = std::getenv("HEBERT_PRESET_DIR"); env && *env) return env;
#ifdef HEBERT_SOURCE_PRESET_DIR
  return HEBERT_SOURCE_PRESET_DIR;
#else
  return "presets";
#endif
}

CkksParams load_preset(std::string_view name) {
  const auto path = std::filesystem::path(preset_directory()) / (std::string(name) + ".params");
  std::ifstream in(path);
  if (!in) return generate_preset(name);
  std::stringstream ss;
  ss << in.rdbuf();
  auto p = CkksParams::from_text(ss.str());
  require(p.security_preset_name == name, kModule, ErrorCode::ParamsMismatch,
          "preset file " + path.string() + " names a different preset");
  return p;
}

}  // namespace hebert::ckks
