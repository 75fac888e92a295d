#include <immintrin.h>

#include "kernels_impl.hpp"

// Built with -mavx2 (no -mfma): multiplies and adds stay separately rounded
// so results match the scalar reference exactly.
namespace dts::simd::detail {
namespace {

void scale_add(std::span<float> out, float a, std::span<const float> x, float b,
               std::span<const float> y) {
  const std::size_t n = out.size();
  const __m256 va = _mm256_set1_ps(a);
  const __m256 vb = _mm256_set1_ps(b);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 ax = _mm256_mul_ps(va, _mm256_loadu_ps(x.data() + i));
    const __m256 by = _mm256_mul_ps(vb, _mm256_loadu_ps(y.data() + i));
    _mm256_storeu_ps(out.data() + i, _mm256_add_ps(ax, by));
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void affine(std::span<float> out, std::span<const float> x, float scale, float offset) {
  const std::size_t n = out.size();
  const __m256 vs = _mm256_set1_ps(scale);
  const __m256 vo = _mm256_set1_ps(offset);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_mul_ps(_mm256_loadu_ps(x.data() + i), vs);
    _mm256_storeu_ps(out.data() + i, _mm256_add_ps(v, vo));
  }
  for (; i < n; ++i) out[i] = x[i] * scale + offset;
}

void ddim_update(std::span<float> out, std::span<const float> x, std::span<const float> eps,
                 float signal_t, float noise_t, float signal_prev, float noise_prev) {
  const std::size_t n = out.size();
  const __m256 st = _mm256_set1_ps(signal_t);
  const __m256 nt = _mm256_set1_ps(noise_t);
  const __m256 sp = _mm256_set1_ps(signal_prev);
  const __m256 np = _mm256_set1_ps(noise_prev);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 e = _mm256_loadu_ps(eps.data() + i);
    const __m256 x0 =
        _mm256_div_ps(_mm256_sub_ps(_mm256_loadu_ps(x.data() + i), _mm256_mul_ps(nt, e)), st);
    _mm256_storeu_ps(out.data() + i, _mm256_add_ps(_mm256_mul_ps(sp, x0), _mm256_mul_ps(np, e)));
  }
  for (; i < n; ++i) {
    const float x0 = (x[i] - noise_t * eps[i]) / signal_t;
    out[i] = signal_prev * x0 + noise_prev * eps[i];
  }
}

void accumulate(std::span<double> acc, std::span<const float> x) {
  const std::size_t n = acc.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wide = _mm256_cvtps_pd(_mm_loadu_ps(x.data() + i));
    _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(_mm256_loadu_pd(acc.data() + i), wide));
  }
  for (; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

void add_constant(std::span<double> acc, double value) {
  const std::size_t n = acc.size();
  const __m256d v = _mm256_set1_pd(value);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(_mm256_loadu_pd(acc.data() + i), v));
  for (; i < n; ++i) acc[i] += value;
}

void divide(std::span<float> out, std::span<const double> num, std::span<const double> den) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d q = _mm256_div_pd(_mm256_loadu_pd(num.data() + i), _mm256_loadu_pd(den.data() + i));
    _mm_storeu_ps(out.data() + i, _mm256_cvtpd_ps(q));
  }
  for (; i < n; ++i) out[i] = static_cast<float>(num[i] / den[i]);
}

void axpy(std::span<float> acc, float w, std::span<const float> x) {
  const std::size_t n = acc.size();
  const __m256 vw = _mm256_set1_ps(w);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 wx = _mm256_mul_ps(vw, _mm256_loadu_ps(x.data() + i));
    _mm256_storeu_ps(acc.data() + i, _mm256_add_ps(_mm256_loadu_ps(acc.data() + i), wx));
  }
  for (; i < n; ++i) acc[i] += w * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i)));
    s1 = _mm256_add_pd(s1, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i + 4),
                                         _mm256_loadu_pd(b.data() + i + 4)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(s0, s1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{Isa::Avx2,  "avx2",       scale_add, affine, ddim_update,
                             accumulate, add_constant, divide,    axpy,   dot};
  return t;
}

}  // namespace dts::simd::detail
