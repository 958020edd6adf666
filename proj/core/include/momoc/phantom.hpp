#pragma once

#include <cstdint>
#include <string_view>

#include "momoc/volume.hpp"

namespace momoc {

enum class PhantomKind { kShepp3d, kBlobs };

PhantomKind phantom_kind_from_name(std::string_view name);

// Deterministic piecewise-smooth test object with values in [0, 1] and zero
// background. `seed` only affects kBlobs. Every axis needs at least 16 voxels.
RealVolume make_phantom(PhantomKind kind, const Dims& dims, std::uint64_t seed = 0);

}  // namespace momoc
