#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "dts/simd.hpp"

using namespace dts::simd;

namespace {

std::vector<float> floats(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> d(-3.0f, 3.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

std::vector<double> doubles(std::size_t n, std::uint64_t seed, double lo = -3.0, double hi = 3.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

template <class T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

// Lengths straddling vector widths so tails are exercised.
const std::size_t kLengths[] = {0, 1, 3, 4, 7, 8, 9, 15, 16, 17, 31, 33, 100, 1023};

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!supported(Isa::Avx2)) GTEST_SKIP() << "no AVX2 on this host";
  }
  const KernelTable& s = table(Isa::Scalar);
  const KernelTable& v() { return table(Isa::Avx2); }
};

}  // namespace

TEST(Simd, ScalarAlwaysSupported) {
  EXPECT_TRUE(supported(Isa::Scalar));
  EXPECT_EQ(table(Isa::Scalar).isa, Isa::Scalar);
  EXPECT_EQ(isa_name(Isa::Scalar), "scalar");
}

TEST(Simd, SelectSwitchesActiveTable) {
  const Isa before = active().isa;
  select(Isa::Scalar);
  EXPECT_EQ(active().isa, Isa::Scalar);
  select(before);
  EXPECT_EQ(active().isa, before);
}

TEST(Simd, ScalarKernelsMatchDefinitions) {
  const auto& k = table(Isa::Scalar);
  std::vector<float> x{1, 2, 3}, y{4, 5, 6}, out(3);
  k.scale_add(out, 2.0f, x, -1.0f, y);
  EXPECT_EQ(out, (std::vector<float>{-2, -1, 0}));
  k.affine(out, x, 3.0f, 0.5f);
  EXPECT_EQ(out, (std::vector<float>{3.5f, 6.5f, 9.5f}));
  std::vector<double> acc{0, 1, 2};
  k.accumulate(acc, x);
  EXPECT_EQ(acc, (std::vector<double>{1, 3, 5}));
  k.add_constant(acc, 0.5);
  EXPECT_EQ(acc, (std::vector<double>{1.5, 3.5, 5.5}));
  std::vector<double> den{3, 7, 11};
  k.divide(out, acc, den);
  EXPECT_EQ(out[0], static_cast<float>(1.5 / 3));
  EXPECT_EQ(out[2], static_cast<float>(5.5 / 11));
  std::vector<float> a{1, 1, 1};
  k.axpy(a, 0.5f, x);
  EXPECT_EQ(a, (std::vector<float>{1.5f, 2.0f, 2.5f}));
  EXPECT_DOUBLE_EQ(k.dot(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}), 32.0);
  // x0 = (x - 0.5 eps) / 2, out = 1 * x0 + 0 * eps
  std::vector<float> eps{2, 2, 2};
  k.ddim_update(out, x, eps, 2.0f, 0.5f, 1.0f, 0.0f);
  EXPECT_EQ(out, (std::vector<float>{0.0f, 0.5f, 1.0f}));
}

TEST_F(KernelEquivalence, ElementwiseKernelsBitIdentical) {
  for (std::size_t n : kLengths) {
    const auto x = floats(n, 1 + n), y = floats(n, 2 + n), e = floats(n, 3 + n);
    std::vector<float> a(n), b(n);

    s.scale_add(a, 0.731f, x, -1.37f, y);
    v().scale_add(b, 0.731f, x, -1.37f, y);
    EXPECT_TRUE(same_bits(a, b)) << "scale_add n=" << n;

    s.affine(a, x, 0.913f, -0.25f);
    v().affine(b, x, 0.913f, -0.25f);
    EXPECT_TRUE(same_bits(a, b)) << "affine n=" << n;

    s.ddim_update(a, x, e, 0.83f, 0.557f, 0.91f, 0.414f);
    v().ddim_update(b, x, e, 0.83f, 0.557f, 0.91f, 0.414f);
    EXPECT_TRUE(same_bits(a, b)) << "ddim_update n=" << n;

    std::vector<float> pa = y, pb = y;
    s.axpy(pa, 0.37f, x);
    v().axpy(pb, 0.37f, x);
    EXPECT_TRUE(same_bits(pa, pb)) << "axpy n=" << n;

    auto da = doubles(n, 4 + n), db = da;
    s.accumulate(da, x);
    v().accumulate(db, x);
    EXPECT_TRUE(same_bits(da, db)) << "accumulate n=" << n;

    s.add_constant(da, 1.0 / 3.0);
    v().add_constant(db, 1.0 / 3.0);
    EXPECT_TRUE(same_bits(da, db)) << "add_constant n=" << n;

    const auto den = doubles(n, 5 + n, 1.0, 9.0);
    s.divide(a, da, den);
    v().divide(b, da, den);
    EXPECT_TRUE(same_bits(a, b)) << "divide n=" << n;
  }
}

TEST_F(KernelEquivalence, DotAgreesWithinRoundoff) {
  for (std::size_t n : kLengths) {
    const auto a = doubles(n, 10 + n), b = doubles(n, 20 + n);
    double abs_sum = 0;
    for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(a[i] * b[i]);
    EXPECT_NEAR(s.dot(a, b), v().dot(a, b), 4 * n * 1.2e-16 * abs_sum + 1e-300) << "n=" << n;
  }
}
