#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dts {

/// Height x width extent of a raster, in latent (or image) pixels.
struct Extent {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t area() const { return height * width; }
  friend bool operator==(const Extent&, const Extent&) = default;
};

struct Dims {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  Extent extent() const { return {height, width}; }
  std::size_t size() const { return height * width * channels; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// H x W x D float raster, row-major with channels innermost.
class LatentTensor {
 public:
  LatentTensor() = default;
  explicit LatentTensor(Dims dims, float fill = 0.0f);
  LatentTensor(Dims dims, std::vector<float> values);

  const Dims& dims() const { return dims_; }
  std::size_t height() const { return dims_.height; }
  std::size_t width() const { return dims_.width; }
  std::size_t channels() const { return dims_.channels; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  float& at(std::size_t row, std::size_t col, std::size_t ch = 0) {
    return values_[(row * dims_.width + col) * dims_.channels + ch];
  }
  float at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return values_[(row * dims_.width + col) * dims_.channels + ch];
  }

  /// All channels of one pixel.
  std::span<float> pixel(std::size_t row, std::size_t col) {
    return {values_.data() + (row * dims_.width + col) * dims_.channels, dims_.channels};
  }
  std::span<const float> pixel(std::size_t row, std::size_t col) const {
    return {values_.data() + (row * dims_.width + col) * dims_.channels, dims_.channels};
  }

  /// `count` pixels of one row starting at `col`, channels interleaved.
  std::span<float> row_span(std::size_t row, std::size_t col, std::size_t count) {
    return {values_.data() + (row * dims_.width + col) * dims_.channels, count * dims_.channels};
  }
  std::span<const float> row_span(std::size_t row, std::size_t col, std::size_t count) const {
    return {values_.data() + (row * dims_.width + col) * dims_.channels, count * dims_.channels};
  }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

  bool all_finite() const;

  friend bool operator==(const LatentTensor&, const LatentTensor&) = default;

 private:
  Dims dims_{};
  std::vector<float> values_;
};

/// Binary H x W raster (values 0 or 1).
struct Mask {
  Extent extent{};
  std::vector<std::uint8_t> bits;

  Mask() = default;
  explicit Mask(Extent e) : extent(e), bits(e.area(), 0) {}

  std::uint8_t& at(std::size_t row, std::size_t col) { return bits[row * extent.width + col]; }
  std::uint8_t at(std::size_t row, std::size_t col) const { return bits[row * extent.width + col]; }
  std::size_t count() const;
  bool any() const { return count() > 0; }

  friend bool operator==(const Mask&, const Mask&) = default;
};

}  // namespace dts
