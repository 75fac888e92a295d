#include <atomic>
#include <cstdlib>
#include <string>

#include "dts/error.hpp"
#include "kernels_impl.hpp"

namespace dts::simd {
namespace {

Isa best_supported() {
  if (supported(Isa::Avx2)) return Isa::Avx2;
  return Isa::Scalar;
}

Isa initial_isa() {
  if (const char* env = std::getenv("DTS_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::Scalar;
    if (v == "avx2" && supported(Isa::Avx2)) return Isa::Avx2;
  }
  return best_supported();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> t{&table(initial_isa())};
  return t;
}

}  // namespace

bool supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(DTS_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!supported(isa)) throw Error("SIMD kernels not supported on this CPU: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(DTS_HAVE_AVX2)
    case Isa::Avx2:
      return detail::avx2_table();
#endif
    default:
      return detail::scalar_table();
  }
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace dts::simd
