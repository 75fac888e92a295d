#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops of the sampler, with a scalar reference
// implementation and ISA-specific variants picked at runtime. Every
// elementwise kernel produces bit-identical results across variants; only
// `dot` is allowed to differ (reduction order).
namespace dts::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;

  // out[i] = a * x[i] + b * y[i]
  void (*scale_add)(std::span<float> out, float a, std::span<const float> x, float b,
                    std::span<const float> y);
  // out[i] = x[i] * scale + offset
  void (*affine)(std::span<float> out, std::span<const float> x, float scale, float offset);
  // x0 = (x[i] - noise_t * eps[i]) / signal_t ; out[i] = signal_prev * x0 + noise_prev * eps[i]
  void (*ddim_update)(std::span<float> out, std::span<const float> x, std::span<const float> eps,
                      float signal_t, float noise_t, float signal_prev, float noise_prev);
  // acc[i] += x[i] (widened)
  void (*accumulate)(std::span<double> acc, std::span<const float> x);
  // acc[i] += value
  void (*add_constant)(std::span<double> acc, double value);
  // out[i] = float(num[i] / den[i])
  void (*divide)(std::span<float> out, std::span<const double> num, std::span<const double> den);
  // acc[i] += w * x[i]
  void (*axpy)(std::span<float> acc, float w, std::span<const float> x);
  double (*dot)(std::span<const double> a, std::span<const double> b);
};

bool supported(Isa isa);

/// Kernel table for a specific ISA; throws dts::Error when unsupported.
const KernelTable& table(Isa isa);

/// Table used by the library. Defaults to the best supported ISA; the
/// DTS_SIMD environment variable ("scalar" or "avx2") overrides it.
const KernelTable& active();

/// Force the active table (tests and benchmarks).
void select(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace dts::simd
