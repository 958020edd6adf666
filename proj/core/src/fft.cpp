#include "momoc/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace momoc {
namespace detail {
namespace {

using PlanKey = std::tuple<std::size_t, std::size_t, std::size_t, int, bool>;

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  // ESTIMATE keeps plans (and therefore results) reproducible across runs.
  fftw_plan get(const Dims& dims, int sign, bool aligned) {
    std::lock_guard<std::mutex> lock(mutex_);
    const PlanKey key{dims.ny, dims.nz, dims.nx, sign, aligned};
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    // ESTIMATE never touches the scratch buffer; execution uses the
    // new-array interface on the caller's storage.
    ComplexVolume scratch(dims);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_3d(static_cast<int>(dims.ny), static_cast<int>(dims.nz),
                                      static_cast<int>(dims.nx), buf, buf, sign,
                                      FFTW_ESTIMATE | (aligned ? 0U : FFTW_UNALIGNED));
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void circular_shift(ComplexVolume& vol, bool forward) {
  const Dims d = vol.dims();
  const std::size_t sy = d.ny / 2, sz = d.nz / 2, sx = d.nx / 2;
  ComplexVolume out(d);
  for (std::size_t iy = 0; iy < d.ny; ++iy) {
    const std::size_t oy = forward ? (iy + sy) % d.ny : (iy + d.ny - sy) % d.ny;
    for (std::size_t iz = 0; iz < d.nz; ++iz) {
      const std::size_t oz = forward ? (iz + sz) % d.nz : (iz + d.nz - sz) % d.nz;
      for (std::size_t ix = 0; ix < d.nx; ++ix) {
        const std::size_t ox = forward ? (ix + sx) % d.nx : (ix + d.nx - sx) % d.nx;
        out.at(oy, oz, ox) = vol.at(iy, iz, ix);
      }
    }
  }
  vol = std::move(out);
}

}  // namespace

void fft3_inplace(ComplexVolume& vol, bool inverse) {
  if (vol.empty()) return;
  auto* buf = reinterpret_cast<fftw_complex*>(vol.data());
  fftw_plan plan = plan_cache().get(vol.dims(), inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                    fftw_alignment_of(reinterpret_cast<double*>(buf)) == 0);
  fftw_execute_dft(plan, buf, buf);
  const double scale = 1.0 / std::sqrt(static_cast<double>(vol.size()));
  for (auto& v : vol) v *= scale;
}

void fftshift(ComplexVolume& vol) { circular_shift(vol, true); }
void ifftshift(ComplexVolume& vol) { circular_shift(vol, false); }

}  // namespace detail

ComplexVolume fft3_centered(const ComplexVolume& vol) {
  require_finite(vol.span(), "fft3_centered input");
  ComplexVolume out = vol;
  detail::ifftshift(out);
  detail::fft3_inplace(out, false);
  detail::fftshift(out);
  return out;
}

ComplexVolume ifft3_centered(const ComplexVolume& vol) {
  require_finite(vol.span(), "ifft3_centered input");
  ComplexVolume out = vol;
  detail::ifftshift(out);
  detail::fft3_inplace(out, true);
  detail::fftshift(out);
  return out;
}

}  // namespace momoc
