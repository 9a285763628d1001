#include "hebert/ring/ring_params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>

#include "hebert/common/error.hpp"
#include "hebert/ring/modarith.hpp"

namespace hebert::ring {

namespace {
constexpr const char* kModule = "ring-arith";
constexpr const char* kHeader = "hebert-ring-params v1";

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

std::vector<std::uint64_t> parse_hex_list(std::istringstream& is) {
  std::vector<std::uint64_t> out;
  std::string tok;
  while (is >> tok) out.push_back(std::stoull(tok, nullptr, 16));
  return out;
}
}  // namespace

void RingParams::validate() const {
  require(ring_degree >= 16 && std::has_single_bit(ring_degree), kModule, ErrorCode::InvalidArgument,
          "ring_degree must be a power of two >= 16");
  require(!moduli_chain.empty(), kModule, ErrorCode::InvalidArgument, "empty moduli chain");
  std::set<std::uint64_t> seen;
  auto check = [&](std::uint64_t q) {
    require(q < (std::uint64_t{1} << 62), kModule, ErrorCode::InvalidArgument, "modulus " + hex(q) + " >= 2^62");
    require(is_prime(q), kModule, ErrorCode::InvalidArgument, "modulus " + hex(q) + " is not prime");
    require(q % (2 * ring_degree) == 1, kModule, ErrorCode::InvalidArgument,
            "modulus " + hex(q) + " is not 1 mod 2N");
    require(seen.insert(q).second, kModule, ErrorCode::InvalidArgument, "duplicate modulus " + hex(q));
  };
  for (auto q : moduli_chain) check(q);
  for (auto p : special_moduli) check(p);
}

double RingParams::chain_bits(bool include_special) const {
  double bits = 0;
  for (auto q : moduli_chain) bits += std::log2(static_cast<double>(q));
  if (include_special)
    for (auto p : special_moduli) bits += std::log2(static_cast<double>(p));
  return bits;
}

std::string RingParams::to_text() const {
  std::ostringstream os;
  os << kHeader << "\n";
  os << "name " << name << "\n";
  os << "ring_degree " << ring_degree << "\n";
  os << "moduli";
  for (auto q : moduli_chain) os << ' ' << hex(q);
  os << "\nspecial_moduli";
  for (auto p : special_moduli) os << ' ' << hex(p);
  os << "\n";
  return os.str();
}

RingParams RingParams::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kHeader, kModule, ErrorCode::Format,
          "missing ring params header");
  RingParams p;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "name") {
      ls >> p.name;
    } else if (key == "ring_degree") {
      ls >> p.ring_degree;
    } else if (key == "moduli") {
      p.moduli_chain = parse_hex_list(ls);
    } else if (key == "special_moduli") {
      p.special_moduli = parse_hex_list(ls);
    }
  }
  p.validate();
  return p;
}

std::vector<std::uint64_t> primes_below(int bits, std::size_t ring_degree, std::size_t count,
                                        const std::vector<std::uint64_t>& exclude) {
  require(bits > 0 && bits <= 62, kModule, ErrorCode::InvalidArgument, "prime size must be at most 62 bits");
  const std::uint64_t step = 2 * ring_degree;
  std::uint64_t cand = ((std::uint64_t{1} << bits) / step) * step + 1;
  std::vector<std::uint64_t> out;
  while (out.size() < count) {
    require(cand > step, kModule, ErrorCode::InvalidArgument, "ran out of primes");
    cand -= step;
    if (cand >= (std::uint64_t{1} << bits)) continue;
    if (std::find(exclude.begin(), exclude.end(), cand) != exclude.end()) continue;
    if (is_prime(cand)) out.push_back(cand);
  }
  return out;
}

std::uint64_t prime_nearest(double target, std::size_t ring_degree, const std::vector<std::uint64_t>& exclude) {
  const std::uint64_t step = 2 * ring_degree;
  const auto base = static_cast<std::uint64_t>(std::llround(target / static_cast<double>(step)));
  auto ok = [&](std::uint64_t c) {
    return c > 2 && is_prime(c) && std::find(exclude.begin(), exclude.end(), c) == exclude.end();
  };
  for (std::uint64_t k = 0;; ++k) {
    const std::uint64_t lo = (base - k) * step + 1;
    const std::uint64_t hi = (base + k + 1) * step + 1;
    const double dlo = std::abs(static_cast<double>(lo) - target);
    const double dhi = std::abs(static_cast<double>(hi) - target);
    if (dlo <= dhi) {
      if (ok(lo)) return lo;
      if (ok(hi)) return hi;
    } else {
      if (ok(hi)) return hi;
      if (ok(lo)) return lo;
    }
  }
}

}  // namespace hebert::ring
