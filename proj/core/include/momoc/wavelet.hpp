#pragma once

#include "momoc/volume.hpp"

namespace momoc {

// Single-level orthonormal 3D Haar transform. Odd axes are zero-padded by one
// sample, so the coefficient volume may be larger than the input; W^H W = I
// holds on the input grid.
ComplexVolume haar3_forward(const ComplexVolume& img);
ComplexVolume haar3_adjoint(const ComplexVolume& coeffs, const Dims& image_dims);

struct WaveletL1 {
  // sum over coefficients of |Re| + |Im|
  double value = 0.0;
  // W^H sign(W x), sign taken per real/imaginary part with sign(0) = 0
  ComplexVolume subgradient;
};

WaveletL1 wavelet_l1(const ComplexVolume& img);

}  // namespace momoc
