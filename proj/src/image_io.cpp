#include "demoire/image_io.hpp"

#include <png.h>

#include <cmath>
#include <vector>

#include "demoire/errors.hpp"

namespace demoire {

Tensor<float> read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot open PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + message);
  }
  const Index h = image.height;
  const Index w = image.width;
  Tensor<float> out(Shape4{1, 3, h, w});
  // correctly rounded k/255 so 0 -> 0.0 and 255 -> 1.0 exactly
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      const png_byte* px = &buffer[std::size_t(y * w + x) * 3];
      for (Index c = 0; c < 3; ++c) out(0, c, y, x) = float(px[c]) / 255.0f;
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Tensor<float>& img) {
  const Shape4& s = img.shape();
  if (s.n != 1 || s.c != 3) {
    throw std::invalid_argument("write_png expects a 1x3xHxW image, got " + s.str());
  }
  std::vector<png_byte> buffer(std::size_t(s.h) * std::size_t(s.w) * 3);
  for (Index y = 0; y < s.h; ++y) {
    for (Index x = 0; x < s.w; ++x) {
      png_byte* px = &buffer[std::size_t(y * s.w + x) * 3];
      for (Index c = 0; c < 3; ++c) {
        const float v = std::fmin(1.0f, std::fmax(0.0f, img(0, c, y, x)));
        px[c] = png_byte(std::lround(v * 255.0f));
      }
    }
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(s.w);
  image.height = png_uint_32(s.h);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

}  // namespace demoire
