#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "dts/tensor.hpp"

namespace dts {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

/// Digest of the DTXL encoding of a tensor.
std::string tensor_digest(const LatentTensor& t);

}  // namespace dts
