#include "hebert/ckks/context.hpp"

#include <cmath>
#include <numbers>

#include "hebert/ring/rns_poly.hpp"

namespace hebert::ckks {

std::shared_ptr<const CkksContext> CkksContext::create(CkksParams params) {
  return std::make_shared<const CkksContext>(std::move(params));
}

CkksContext::CkksContext(CkksParams params) : params_(std::move(params)) {
  params_.validate();
  ring_ = std::make_shared<const ring::RingContext>(params_.ring);
  hash_ = params_.hash();
  scales_ = canonical_scales(params_);

  const std::size_t n = degree();
  const std::size_t chain = params_.ring.moduli_chain.size();
  double acc = 0;
  for (std::size_t l = 0; l < chain; ++l) {
    acc += std::log2(static_cast<double>(params_.ring.moduli_chain[l]));
    log_q_.push_back(acc);
  }

  p_mod_q_.resize(chain);
  p_inv_mod_q_.resize(chain);
  for (std::size_t i = 0; i < chain; ++i) {
    const auto& q = ring_->modulus(i);
    std::uint64_t prod = 1;
    for (auto p : params_.ring.special_moduli) prod = q.mul(prod, q.reduce(p));
    p_mod_q_[i] = prod;
    p_inv_mod_q_[i] = q.inv(prod);
  }

  const std::size_t m = 2 * n;
  rot_group_.resize(slot_count());
  std::uint64_t g = 1;
  for (auto& r : rot_group_) {
    r = g;
    g = g * 5 % m;
  }
  ksi_.resize(m + 1);
  for (std::size_t k = 0; k <= m; ++k) {
    const long double a = 2.0L * std::numbers::pi_v<long double> * k / m;
    ksi_[k] = {static_cast<double>(std::cos(a)), static_cast<double>(std::sin(a))};
  }

  imag_unit_.resize(ring_->modulus_count() * n);
  for (std::size_t idx = 0; idx < ring_->modulus_count(); ++idx) {
    std::span<std::uint64_t> row(imag_unit_.data() + idx * n, n);
    row[n / 2] = 1;
    ring_->ntt(idx).forward(row);
  }

  garner_inv_.resize(chain * chain);
  for (std::size_t i = 0; i < chain; ++i)
    for (std::size_t j = 0; j < chain; ++j)
      if (i != j) {
        const auto& q = ring_->modulus(i);
        garner_inv_[i * chain + j] = q.inv(q.reduce(params_.ring.moduli_chain[j]));
      }
}

std::vector<std::uint32_t> CkksContext::digit_indices(std::size_t digit, std::size_t level) const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = digit * alpha(); i < (digit + 1) * alpha() && i <= level; ++i)
    out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

}  // namespace hebert::ckks
