#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "momoc/error.hpp"

namespace momoc {

using cdouble = std::complex<double>;

// Voxel grid extents, ordered phase-encode y, phase-encode z, readout x.
// Storage is row-major with y outermost and x contiguous.
struct Dims {
  std::size_t ny = 0;
  std::size_t nz = 0;
  std::size_t nx = 0;

  constexpr std::size_t size() const { return ny * nz * nx; }
  constexpr std::size_t operator[](std::size_t axis) const {
    return axis == 0 ? ny : (axis == 1 ? nz : nx);
  }
  constexpr std::size_t index(std::size_t iy, std::size_t iz, std::size_t ix) const {
    return (iy * nz + iz) * nx + ix;
  }
  friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& dims);

// 64-byte aligned storage so FFT plans can use SIMD kernels.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }

  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
};

template <typename T>
class Volume {
 public:
  using value_type = T;
  using Storage = std::vector<T, AlignedAllocator<T>>;

  Volume() = default;
  explicit Volume(Dims dims, T fill = T{}) : dims_(dims), data_(dims.size(), fill) {}
  Volume(Dims dims, const std::vector<T>& data)
      : dims_(dims), data_(data.begin(), data.end()) {
    if (data_.size() != dims_.size()) {
      throw Error(ErrorCode::kInvalidInput, "volume data length does not match " + to_string(dims_));
    }
  }

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t iy, std::size_t iz, std::size_t ix) { return data_[dims_.index(iy, iz, ix)]; }
  const T& at(std::size_t iy, std::size_t iz, std::size_t ix) const {
    return data_[dims_.index(iy, iz, ix)];
  }

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  Storage& values() { return data_; }
  const Storage& values() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Dims dims_;
  Storage data_;
};

using ComplexVolume = Volume<cdouble>;
using RealVolume = Volume<double>;

// Receive-coil sensitivity maps sharing one grid.
struct CoilSet {
  std::vector<ComplexVolume> maps;

  std::size_t n_coils() const { return maps.size(); }
  const Dims& dims() const { return maps.front().dims(); }
  void validate() const;
};

// Throws kInvalidInput when any entry is NaN or infinite.
void require_finite(std::span<const cdouble> values, const char* what);
void require_finite(std::span<const double> values, const char* what);
void require_same_dims(const Dims& a, const Dims& b, const char* what);
void require_binary(const RealVolume& mask, const char* what);

double norm2(std::span<const cdouble> v);
double norm2(std::span<const double> v);
// Conjugate-linear in the first argument.
cdouble dot(std::span<const cdouble> a, std::span<const cdouble> b);

ComplexVolume to_complex(const RealVolume& v);
RealVolume magnitude(const ComplexVolume& v);
RealVolume real_part(const ComplexVolume& v);

}  // namespace momoc
