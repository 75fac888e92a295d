#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dts/tensor.hpp"

namespace dts {

/// DTXL tensor container: "DTXL", u32 version, u32 rank, rank x u64 dims,
/// then the f32 payload, all little-endian, row-major.
inline constexpr std::uint32_t kDtxlVersion = 1;

struct RawTensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> values;
};

void write_dtxl(std::ostream& out, const RawTensor& t);
RawTensor read_dtxl(std::istream& in);

/// Latents are stored as rank-3 (H, W, D).
void save_latent(const std::filesystem::path& path, const LatentTensor& t);
LatentTensor load_latent(const std::filesystem::path& path);

std::string encode_latent(const LatentTensor& t);
LatentTensor decode_latent(const std::string& bytes);

/// Rank-2 tensors are promoted to (H, W, 1); other ranks throw FormatError.
LatentTensor to_latent(const RawTensor& raw);

}  // namespace dts
