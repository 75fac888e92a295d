#include "dts/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dts/error.hpp"

static_assert(std::endian::native == std::endian::little, "DTXL I/O assumes a little-endian host");

namespace dts {
namespace {

constexpr std::array<char, 4> kMagic{'D', 'T', 'X', 'L'};
constexpr std::uint32_t kMaxRank = 8;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("DTXL: truncated header");
  return v;
}

}  // namespace

void write_dtxl(std::ostream& out, const RawTensor& t) {
  std::uint64_t count = 1;
  for (auto d : t.dims) count *= d;
  if (count != t.values.size()) throw DimMismatch("DTXL: dims do not match payload length");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kDtxlVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put<std::uint64_t>(out, d);
  out.write(reinterpret_cast<const char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  if (!out) throw FormatError("DTXL: write failed");
}

RawTensor read_dtxl(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("DTXL: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kDtxlVersion) throw FormatError("DTXL: unsupported version " + std::to_string(version));
  const auto rank = get<std::uint32_t>(in);
  if (rank == 0 || rank > kMaxRank) throw FormatError("DTXL: unsupported rank " + std::to_string(rank));
  RawTensor t;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims.push_back(get<std::uint64_t>(in));
    count *= t.dims.back();
  }
  if (count > (std::uint64_t{1} << 34)) throw FormatError("DTXL: payload too large");
  t.values.resize(count);
  if (!in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(count * sizeof(float))))
    throw FormatError("DTXL: truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("DTXL: trailing bytes");
  return t;
}

LatentTensor to_latent(const RawTensor& raw) {
  Dims d;
  if (raw.dims.size() == 2) {
    d = {raw.dims[0], raw.dims[1], 1};
  } else if (raw.dims.size() == 3) {
    d = {raw.dims[0], raw.dims[1], raw.dims[2]};
  } else {
    throw FormatError("rank " + std::to_string(raw.dims.size()) + " tensor unsupported (expected 2 or 3)");
  }
  return LatentTensor(d, raw.values);
}

std::string encode_latent(const LatentTensor& t) {
  std::ostringstream out(std::ios::binary);
  RawTensor raw{{t.height(), t.width(), t.channels()}, {t.values().begin(), t.values().end()}};
  write_dtxl(out, raw);
  return std::move(out).str();
}

LatentTensor decode_latent(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return to_latent(read_dtxl(in));
}

void save_latent(const std::filesystem::path& path, const LatentTensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_latent(t);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

LatentTensor load_latent(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return to_latent(read_dtxl(in));
}

}  // namespace dts
