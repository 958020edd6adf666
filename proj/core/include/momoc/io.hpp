#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "momoc/volume.hpp"

namespace momoc {

// PMV1 container: one JSON header line
//   {"magic":"PMV1","dtype":"c64"|"f32","dims":[...],"endianness":"little","meta":{...}}
// followed by little-endian float32 samples, complex interleaved (re, im).
// dims are [ny, nz, nx], or [n, ny, nz, nx] for a stack of volumes (coils).
struct PmvFile {
  std::string dtype;
  std::vector<std::size_t> dims;
  std::string meta_json = "{}";
  std::vector<float> payload;

  std::size_t n_volumes() const { return dims.size() == 4 ? dims[0] : 1; }
  Dims volume_dims() const;
};

void write_pmv(const std::filesystem::path& path, const PmvFile& file);
PmvFile read_pmv(const std::filesystem::path& path);

void write_volume(const std::filesystem::path& path, const ComplexVolume& vol,
                  const std::string& meta_json = "{}");
void write_volume(const std::filesystem::path& path, const RealVolume& vol,
                  const std::string& meta_json = "{}");
void write_volumes(const std::filesystem::path& path, const std::vector<ComplexVolume>& vols,
                   const std::string& meta_json = "{}");

// Paths ending in .nii are read as NIfTI-1, everything else as PMV1. A c64
// file read as real yields its magnitude.
RealVolume read_real_volume(const std::filesystem::path& path);
ComplexVolume read_complex_volume(const std::filesystem::path& path);
// A 3-D file yields a single volume.
std::vector<ComplexVolume> read_volumes(const std::filesystem::path& path);
// Same, for any real-valued writer: picks NIfTI for .nii paths.
void write_real_volume(const std::filesystem::path& path, const RealVolume& vol,
                       const std::string& meta_json = "{}");

// Uncompressed single-file NIfTI-1 (.nii), float32 on write. NIfTI dim 1 is
// our x (contiguous), dim 2 z and dim 3 y. Reading accepts uint8, int16,
// int32, uint16, float32 and float64 in either byte order and applies
// scl_slope / scl_inter.
void write_nifti(const std::filesystem::path& path, const RealVolume& vol);
RealVolume read_nifti(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace momoc
