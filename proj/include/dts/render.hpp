#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dts/tensor.hpp"

namespace dts {

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> pixels;
  friend bool operator==(const Image&, const Image&) = default;
};

/// Per-channel min-max normalization to 8 bits. One channel renders gray,
/// three or more render the first three as RGB; two channels are rejected.
/// Constant channels render as 0.
Image render_tensor(const LatentTensor& t);

/// Pixel values as floats in [0, 255].
LatentTensor image_to_tensor(const Image& image);

void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

}  // namespace dts
