#include "kernels_impl.hpp"

namespace dts::simd::detail {
namespace {

void scale_add(std::span<float> out, float a, std::span<const float> x, float b,
               std::span<const float> y) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
}

void affine(std::span<float> out, std::span<const float> x, float scale, float offset) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * scale + offset;
}

void ddim_update(std::span<float> out, std::span<const float> x, std::span<const float> eps,
                 float signal_t, float noise_t, float signal_prev, float noise_prev) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float x0 = (x[i] - noise_t * eps[i]) / signal_t;
    out[i] = signal_prev * x0 + noise_prev * eps[i];
  }
}

void accumulate(std::span<double> acc, std::span<const float> x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(x[i]);
}

void add_constant(std::span<double> acc, double value) {
  for (double& a : acc) a += value;
}

void divide(std::span<float> out, std::span<const double> num, std::span<const double> den) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(num[i] / den[i]);
}

void axpy(std::span<float> acc, float w, std::span<const float> x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::Scalar, "scalar", scale_add, affine,  ddim_update,
                             accumulate,  add_constant, divide, axpy, dot};
  return t;
}

}  // namespace dts::simd::detail
