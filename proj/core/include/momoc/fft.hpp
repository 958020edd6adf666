#pragma once

#include "momoc/volume.hpp"

namespace momoc {

// Unitary 3D DFT with the DC sample at index floor(n/2) on every axis.
ComplexVolume fft3_centered(const ComplexVolume& vol);
ComplexVolume ifft3_centered(const ComplexVolume& vol);

namespace detail {

// In-place unitary DFT without shifts (DC at index 0). Backed by FFTW with
// FFTW_ESTIMATE plans so repeated runs are bitwise reproducible.
void fft3_inplace(ComplexVolume& vol, bool inverse);

// Signed frequency of unshifted index i on an axis of length n, matching the
// centered layout where index 0 maps to -floor(n/2).
inline long signed_frequency(std::size_t i, std::size_t n) {
  const std::size_t positive = n - n / 2;
  return i < positive ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
}

void fftshift(ComplexVolume& vol);
void ifftshift(ComplexVolume& vol);

}  // namespace detail
}  // namespace momoc
