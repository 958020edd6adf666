#include "png.hpp"

#include <png.h>

#include "momoc/error.hpp"

namespace momoc::service {
namespace {

void append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

void flush(png_structp) {}

}  // namespace

std::string encode_png_gray8(const std::vector<std::uint8_t>& pixels, std::size_t width,
                             std::size_t height) {
  if (pixels.size() != width * height || width == 0 || height == 0) {
    throw Error(ErrorCode::kInvalidInput, "PNG pixel buffer does not match its size");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::kIo, "libpng initialization failed");
  }
  std::string out;
  std::vector<png_bytep> rows(height);
  for (std::size_t r = 0; r < height; ++r) {
    rows[r] = const_cast<png_bytep>(pixels.data() + r * width);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, append, flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace momoc::service
