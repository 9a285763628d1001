#pragma once

#include <complex>
#include <span>
#include <vector>

#include "hebert/ckks/ciphertext.hpp"
#include "hebert/ckks/context.hpp"

namespace hebert::ckks {

using cplx = std::complex<double>;

/// In-place special FFT pair over the rotation group 5^j. `special_fft`
/// maps coefficient pairs to slot values (decoding); the inverse includes
/// the 1/n normalisation.
void special_fft(const CkksContext& ctx, std::span<cplx> vals);
void special_ifft(const CkksContext& ctx, std::span<cplx> vals);

/// Vectors shorter than slot_count are zero-padded.
Plaintext encode(const CkksContext& ctx, std::span<const cplx> values, std::size_t level, double scale);
Plaintext encode(const CkksContext& ctx, std::span<const double> values, std::size_t level, double scale);
/// Same constant in every slot.
Plaintext encode_constant(const CkksContext& ctx, cplx value, std::size_t level, double scale);

std::vector<cplx> decode(const CkksContext& ctx, const Plaintext& pt);
std::vector<double> decode_real(const CkksContext& ctx, const Plaintext& pt);

/// Residues of round(c) modulo each limb's prime. |c| must stay below 2^124.
void set_coefficient(ring::RnsPoly& p, std::size_t index, long double c);

/// Centered integer coefficients of a coefficient-form poly, as long double.
std::vector<long double> centered_coefficients(const CkksContext& ctx, const ring::RnsPoly& coeff_form);

}  // namespace hebert::ckks
