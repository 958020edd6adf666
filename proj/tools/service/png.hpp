#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace momoc::service {

// 8-bit grayscale PNG, rows top to bottom.
std::string encode_png_gray8(const std::vector<std::uint8_t>& pixels, std::size_t width,
                             std::size_t height);

}  // namespace momoc::service
