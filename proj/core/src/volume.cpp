#include "momoc/volume.hpp"

#include <cmath>

namespace momoc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
      return "invalid input";
    case ErrorCode::kConfiguration:
      return "configuration error";
    case ErrorCode::kSolverDiverged:
      return "solver diverged";
    case ErrorCode::kDegenerateExclusion:
      return "degenerate exclusion";
    case ErrorCode::kRegistrationUndefined:
      return "registration undefined";
    case ErrorCode::kUndefinedCorrelation:
      return "undefined correlation";
    case ErrorCode::kIo:
      return "i/o error";
  }
  return "error";
}

std::string to_string(const Dims& dims) {
  return "(" + std::to_string(dims.ny) + ", " + std::to_string(dims.nz) + ", " +
         std::to_string(dims.nx) + ")";
}

void CoilSet::validate() const {
  if (maps.empty()) {
    throw Error(ErrorCode::kInvalidInput, "coil set is empty");
  }
  for (const auto& m : maps) {
    require_same_dims(m.dims(), maps.front().dims(), "coil maps");
  }
}

void require_finite(std::span<const cdouble> values, const char* what) {
  for (const auto& v : values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw Error(ErrorCode::kInvalidInput, std::string(what) + " contains non-finite values");
    }
  }
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidInput, std::string(what) + " contains non-finite values");
    }
  }
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorCode::kInvalidInput,
                std::string(what) + ": dimension mismatch " + to_string(a) + " vs " + to_string(b));
  }
}

void require_binary(const RealVolume& mask, const char* what) {
  for (double v : mask) {
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorCode::kInvalidInput, std::string(what) + " must contain only 0 and 1");
    }
  }
}

double norm2(std::span<const cdouble> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double z : v) s += z * z;
  return std::sqrt(s);
}

cdouble dot(std::span<const cdouble> a, std::span<const cdouble> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidInput, "dot: length mismatch");
  }
  cdouble s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

ComplexVolume to_complex(const RealVolume& v) {
  ComplexVolume out(v.dims());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

RealVolume magnitude(const ComplexVolume& v) {
  RealVolume out(v.dims());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
  return out;
}

RealVolume real_part(const ComplexVolume& v) {
  RealVolume out(v.dims());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

}  // namespace momoc
