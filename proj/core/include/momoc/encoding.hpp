#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "momoc/rigid.hpp"
#include "momoc/sampling.hpp"
#include "momoc/volume.hpp"

namespace momoc {

// k-space samples of one shot: n_coils x n_lines x nx, readout contiguous,
// lines in the order given by SamplingPlan::lines_of_shot.
struct ShotSamples {
  std::size_t n_coils = 0;
  std::size_t n_lines = 0;
  std::size_t nx = 0;
  std::vector<cdouble> data;

  ShotSamples() = default;
  ShotSamples(std::size_t coils, std::size_t lines, std::size_t readout)
      : n_coils(coils), n_lines(lines), nx(readout), data(coils * lines * readout) {}

  std::span<cdouble> coil(std::size_t c) { return {data.data() + c * n_lines * nx, n_lines * nx}; }
  std::span<const cdouble> coil(std::size_t c) const {
    return {data.data() + c * n_lines * nx, n_lines * nx};
  }
};

// Per-coil k-space on the full (ky, kz, kx) grid, zeros at unsampled lines.
using MultiCoilKSpace = std::vector<ComplexVolume>;

// A_s x = M_s F S_c T_p x for every coil.
ShotSamples encode_shot(const ComplexVolume& img, const CoilSet& coils, const SamplingPlan& plan,
                        std::size_t shot, const RigidParams& p);

// A_s^H y = T_p^H sum_c conj(S_c) F^H M_s^H y_c.
ComplexVolume adjoint_shot(const ShotSamples& samples, const CoilSet& coils,
                           const SamplingPlan& plan, std::size_t shot, const RigidParams& p);

// Smooth synthetic receive profiles placed around the head in the (y, z)
// plane, normalized so that sum_c |S_c|^2 = 1 at every voxel.
CoilSet make_coil_maps(const Dims& dims, std::size_t n_coils);
CoilSet unit_coil(const Dims& dims);

void check_encoding_inputs(const Dims& img, const CoilSet& coils, const SamplingPlan& plan);

// Gather the plan's lines of one shot from a full-grid k-space volume.
void gather_lines(const ComplexVolume& kspace, std::span<const LineIndex> lines,
                  std::span<cdouble> out);
// Scatter lines into a zero-initialized full-grid k-space volume.
void scatter_lines(std::span<const cdouble> in, std::span<const LineIndex> lines,
                   ComplexVolume& kspace);

// Splits full-grid multi-coil k-space into per-shot samples.
std::vector<ShotSamples> split_by_shot(const MultiCoilKSpace& ksp, const SamplingPlan& plan);

}  // namespace momoc

namespace momoc::detail {

// Building blocks shared by the shot operators and the solvers. Spectra here
// are kept in unshifted FFT layout; gather/scatter translate centered (ky, kz,
// kx) line addresses on the fly.

// spectrum = unshifted unitary FFT of ifftshift(coil_map .* img).
void coil_spectrum(const ComplexVolume& coil_map, const ComplexVolume& img,
                   ComplexVolume& spectrum);
void gather_unshifted(const ComplexVolume& spectrum, std::span<const LineIndex> lines,
                      std::span<cdouble> out);
void scatter_unshifted(std::span<const cdouble> in, std::span<const LineIndex> lines,
                       ComplexVolume& spectrum);
// acc += conj(coil_map) .* fftshift(IFFT(spectrum)); spectrum is overwritten.
void coil_backproject_accumulate(const ComplexVolume& coil_map, ComplexVolume& spectrum,
                                 ComplexVolume& acc);

}  // namespace momoc::detail
