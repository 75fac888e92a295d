#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>

namespace dts {

/// Seeded generator with distribution transforms fixed in this library, so a
/// seed yields the same stream on every standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal (Box-Muller, pairs cached).
  double normal();
  void fill_normal(std::span<float> out);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

enum class StreamPurpose : std::uint32_t { Init = 1, Denoise = 2, Forward = 3, Perturb = 4, Layout = 5 };

/// Coordinates of one independent random stream inside a run.
struct StreamKey {
  StreamPurpose purpose = StreamPurpose::Init;
  std::uint32_t phase = 0;
  std::uint32_t step = 0;
  std::uint32_t window = 0;
};

/// Derives reproducible, decorrelated generators from one master seed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t derive_seed(const StreamKey& key) const;
  Rng at(const StreamKey& key) const { return Rng(derive_seed(key)); }

 private:
  std::uint64_t master_;
};

}  // namespace dts
