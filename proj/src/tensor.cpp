#include "dts/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "dts/error.hpp"

namespace dts {

LatentTensor::LatentTensor(Dims dims, float fill) : dims_(dims), values_(dims.size(), fill) {}

LatentTensor::LatentTensor(Dims dims, std::vector<float> values)
    : dims_(dims), values_(std::move(values)) {
  if (values_.size() != dims_.size())
    throw DimMismatch("tensor payload has " + std::to_string(values_.size()) +
                      " values, dims require " + std::to_string(dims_.size()));
}

bool LatentTensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

}  // namespace dts
