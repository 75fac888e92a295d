#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <cstring>
#include <unistd.h>

#include "dts/tensor.hpp"

namespace test {

inline dts::LatentTensor random_tensor(dts::Dims dims, std::uint64_t seed, float lo = -2.0f, float hi = 2.0f) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  dts::LatentTensor t(dims);
  for (float& v : t.values()) v = dist(gen);
  return t;
}

inline bool bit_equal(const dts::LatentTensor& a, const dts::LatentTensor& b) {
  if (a.dims().height != b.dims().height || a.dims().width != b.dims().width ||
      a.dims().channels != b.dims().channels)
    return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::uint32_t x, y;
    std::memcpy(&x, &a.values()[i], 4);
    std::memcpy(&y, &b.values()[i], 4);
    if (x != y) return false;
  }
  return true;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dts_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test
