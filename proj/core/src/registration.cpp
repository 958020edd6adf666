#include "momoc/registration.hpp"

#include <array>
#include <cmath>

namespace momoc {
namespace {

RealVolume transformed(const RealVolume& vol, const RigidParams& p) {
  return real_part(apply_rigid(to_complex(vol), p));
}

void require_variance(const RealVolume& v, const char* what) {
  if (v.empty()) throw Error(ErrorCode::kRegistrationUndefined, std::string(what) + " is empty");
  const double first = v[0];
  for (double x : v) {
    if (x != first) return;
  }
  throw Error(ErrorCode::kRegistrationUndefined,
              std::string(what) + " has zero variance; registration is undefined");
}

}  // namespace

double ncc(const RealVolume& a, const RealVolume& b) {
  require_same_dims(a.dims(), b.dims(), "ncc inputs");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) {
    throw Error(ErrorCode::kRegistrationUndefined, "ncc of a zero-variance volume is undefined");
  }
  return sab / std::sqrt(saa * sbb);
}

RealVolume block_downsample(const RealVolume& vol, std::size_t factor) {
  if (factor == 0) throw Error(ErrorCode::kInvalidInput, "downsampling factor must be positive");
  if (factor == 1) return vol;
  const Dims d = vol.dims();
  const Dims out_dims{d.ny / factor, d.nz / factor, d.nx / factor};
  if (out_dims.size() == 0) {
    throw Error(ErrorCode::kInvalidInput, "volume too small for downsampling by " +
                                              std::to_string(factor));
  }
  RealVolume out(out_dims);
  const double inv = 1.0 / static_cast<double>(factor * factor * factor);
  for (std::size_t y = 0; y < out_dims.ny * factor; ++y) {
    for (std::size_t z = 0; z < out_dims.nz * factor; ++z) {
      for (std::size_t x = 0; x < out_dims.nx * factor; ++x) {
        out.at(y / factor, z / factor, x / factor) += vol.at(y, z, x) * inv;
      }
    }
  }
  return out;
}

RigidParams register_rigid(const RealVolume& moving, const RealVolume& fixed,
                           const RegistrationOptions& opts) {
  require_same_dims(moving.dims(), fixed.dims(), "register_rigid inputs");
  require_finite(moving.span(), "moving volume");
  require_finite(fixed.span(), "fixed volume");
  require_variance(moving, "moving volume");
  require_variance(fixed, "fixed volume");

  std::array<double, 6> params{};  // translations in full-resolution voxels
  for (std::size_t factor : opts.factors) {
    if (factor == 0) throw Error(ErrorCode::kInvalidInput, "downsampling factor must be positive");
    const Dims d = moving.dims();
    if (d.ny / factor < 8 || d.nz / factor < 8 || d.nx / factor < 8) continue;
    const RealVolume mov = block_downsample(moving, factor);
    const RealVolume fix = block_downsample(fixed, factor);
    // A uniform block average can flatten a volume with little structure.
    bool flat = false;
    try {
      require_variance(mov, "moving");
      require_variance(fix, "fixed");
    } catch (const Error&) {
      flat = true;
    }
    if (flat) continue;

    const double f = static_cast<double>(factor);
    auto score = [&](const std::array<double, 6>& p) {
      std::array<double, 6> level = p;
      for (std::size_t a = 3; a < 6; ++a) level[a] /= f;
      return ncc(transformed(fix, RigidParams::from_array(level)), mov);
    };

    double best = score(params);
    std::array<double, 6> step{};
    for (std::size_t j = 0; j < 3; ++j) step[j] = opts.initial_rot_step;
    for (std::size_t j = 3; j < 6; ++j) step[j] = opts.initial_trans_step * f;
    std::size_t evaluations = 1;
    auto above_min = [&] {
      for (std::size_t j = 0; j < 3; ++j) {
        if (step[j] >= opts.min_rot_step) return true;
      }
      for (std::size_t j = 3; j < 6; ++j) {
        if (step[j] >= opts.min_trans_step * f) return true;
      }
      return false;
    };
    while (above_min() && evaluations < opts.max_evaluations_per_level) {
      bool improved = false;
      for (std::size_t j = 0; j < 6; ++j) {
        for (double sign : {1.0, -1.0}) {
          std::array<double, 6> trial = params;
          trial[j] += sign * step[j];
          const double s = score(trial);
          ++evaluations;
          if (s > best) {
            best = s;
            params = trial;
            improved = true;
            break;
          }
        }
      }
      if (!improved) {
        for (double& s : step) s *= 0.5;
      }
    }
  }
  return RigidParams::from_array(params);
}

RealVolume align_to_fixed(const RealVolume& moving, const RigidParams& pose) {
  return real_part(apply_rigid_inverse(to_complex(moving), pose));
}

}  // namespace momoc
