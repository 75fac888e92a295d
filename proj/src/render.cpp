#include "dts/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "dts/error.hpp"

namespace dts {

Image render_tensor(const LatentTensor& t) {
  if (t.empty()) throw FormatError("cannot render an empty tensor");
  const std::size_t in_ch = t.channels();
  if (in_ch == 2) throw FormatError("two-channel tensors cannot be rendered");
  const std::size_t out_ch = in_ch == 1 ? 1 : 3;

  Image img{t.width(), t.height(), out_ch, std::vector<std::uint8_t>(t.width() * t.height() * out_ch)};
  for (std::size_t c = 0; c < out_ch; ++c) {
    float lo = t.at(0, 0, c), hi = lo;
    for (std::size_t r = 0; r < t.height(); ++r)
      for (std::size_t col = 0; col < t.width(); ++col) {
        lo = std::min(lo, t.at(r, col, c));
        hi = std::max(hi, t.at(r, col, c));
      }
    const double range = static_cast<double>(hi) - static_cast<double>(lo);
    for (std::size_t r = 0; r < t.height(); ++r)
      for (std::size_t col = 0; col < t.width(); ++col) {
        const double v = range > 0 ? (static_cast<double>(t.at(r, col, c)) - lo) / range : 0.0;
        img.pixels[(r * t.width() + col) * out_ch + c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
  }
  return img;
}

LatentTensor image_to_tensor(const Image& image) {
  LatentTensor t({image.height, image.width, image.channels});
  std::transform(image.pixels.begin(), image.pixels.end(), t.values().begin(),
                 [](std::uint8_t v) { return static_cast<float>(v); });
  return t;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw FormatError(std::string("png: ") + msg); }

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw FormatError("png: unsupported channel count");
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, nullptr);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t r = 0; r < image.height; ++r)
      png_write_row(png, image.pixels.data() + r * image.width * image.channels);
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) throw FormatError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, nullptr);
  png_infop info = png_create_info_struct(png);
  Image img;
  try {
    png_init_io(png, f.get());
    png_read_info(png, info);
    const auto type = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) != 8 || (type != PNG_COLOR_TYPE_GRAY && type != PNG_COLOR_TYPE_RGB))
      throw FormatError("png: only 8-bit gray or RGB images are supported");
    img.width = png_get_image_width(png, info);
    img.height = png_get_image_height(png, info);
    img.channels = type == PNG_COLOR_TYPE_GRAY ? 1 : 3;
    img.pixels.resize(img.width * img.height * img.channels);
    for (std::size_t r = 0; r < img.height; ++r)
      png_read_row(png, img.pixels.data() + r * img.width * img.channels, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace dts
