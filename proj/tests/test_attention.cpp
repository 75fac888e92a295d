#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dts/attention.hpp"
#include "dts/error.hpp"

using namespace dts::attention;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& gen) {
  std::normal_distribution<double> d(0, 1);
  Matrix m(r, c);
  for (double& v : m.data) v = d(gen);
  return m;
}

SegmentSpec segment(std::size_t nq, std::size_t nk, std::vector<std::size_t> q, std::vector<std::size_t> k,
                    std::optional<double> area = std::nullopt) {
  SegmentSpec s{std::vector<std::uint8_t>(nq, 0), std::vector<std::uint8_t>(nk, 0), area};
  for (auto i : q) s.query[i] = 1;
  for (auto j : k) s.key[j] = 1;
  return s;
}

}  // namespace

TEST(BaseAttention, IdentityExample) {
  const auto a = base_attention(Matrix::identity(2), Matrix::identity(2));
  const double e = std::exp(1.0 / std::sqrt(2.0));
  EXPECT_NEAR(a(0, 0), e / (e + 1), 1e-15);
  EXPECT_NEAR(a(0, 0), 0.6698, 1e-4);
  EXPECT_NEAR(a(0, 1), 0.3302, 1e-4);
  EXPECT_NEAR(a(1, 1), a(0, 0), 1e-15);
}

TEST(BaseAttention, ZeroQueriesGiveUniformRows) {
  std::mt19937_64 gen(1);
  const auto a = base_attention(Matrix(3, 4), random_matrix(5, 4, gen));
  for (double v : a.data) EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(BaseAttention, RowsSumToOneAndStable) {
  std::mt19937_64 gen(2);
  auto q = random_matrix(6, 3, gen);
  for (double& v : q.data) v *= 500;  // large logits
  const auto a = base_attention(q, random_matrix(7, 3, gen));
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0;
    for (double v : a.row(i)) {
      EXPECT_TRUE(std::isfinite(v));
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_THROW(base_attention(Matrix(2, 3), Matrix(2, 4)), dts::DimMismatch);
}

TEST(ConditionMap, Examples) {
  const std::vector<SegmentSpec> all{segment(3, 2, {0, 1, 2}, {0, 1})};
  for (double v : build_condition_map(all, 3, 2).data) EXPECT_EQ(v, 1.0);

  const std::vector<SegmentSpec> halves{segment(4, 4, {0, 1}, {0, 1}), segment(4, 4, {2, 3}, {2, 3})};
  const auto r = build_condition_map(halves, 4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(r(i, j), (i / 2 == j / 2) ? 1.0 : 0.0);

  for (double v : build_condition_map({}, 3, 3).data) EXPECT_EQ(v, 0.0);

  const std::vector<SegmentSpec> clash{segment(2, 2, {0}, {0}), segment(2, 2, {1}, {0})};
  EXPECT_THROW(build_condition_map(clash, 2, 2), dts::OverlapError);
}

TEST(SizeMap, Examples) {
  const std::vector<SegmentSpec> full{segment(4, 2, {0, 1, 2, 3}, {0})};
  const auto s = build_size_map(full, 4, 4, 2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s(i, 0), 1.0);

  const std::vector<SegmentSpec> half{segment(4, 2, {0, 1}, {0})};
  const auto h = build_size_map(half, 4, 4, 2);
  EXPECT_EQ(h(0, 0), 0.5);
  EXPECT_EQ(h(1, 0), 0.5);
  EXPECT_EQ(h(2, 0), 0.0);  // query outside every segment

  for (double v : build_size_map({}, 10, 3, 3).data) EXPECT_EQ(v, 0.0);
  const std::vector<SegmentSpec> declared{segment(4, 2, {0}, {1}, 2.5)};
  EXPECT_EQ(build_size_map(declared, 10, 4, 2)(0, 1), 0.25);
}

TEST(RangeMaps, Examples) {
  Matrix raw(2, 2);
  raw(0, 0) = 0;
  raw(0, 1) = 1;
  raw(1, 0) = 3;
  raw(1, 1) = 3;
  const auto m = build_range_maps(raw);
  EXPECT_EQ(m.pos(0, 0), 1.0);
  EXPECT_EQ(m.pos(0, 1), 0.0);
  EXPECT_EQ(m.neg(0, 0), 0.0);
  EXPECT_EQ(m.neg(0, 1), 1.0);
  EXPECT_EQ(m.pos(1, 0), 0.0);
  EXPECT_EQ(m.neg(1, 1), 0.0);
  std::mt19937_64 gen(3);
  const auto r = build_range_maps(random_matrix(8, 8, gen));
  for (std::size_t k = 0; k < 64; ++k) {
    EXPECT_GE(r.pos.data[k], 0.0);
    EXPECT_GE(r.neg.data[k], 0.0);
  }
}

TEST(Lambda, Schedule) {
  EXPECT_EQ(lambda_schedule({2.0, 0.0, 10.0}), 0.0);
  EXPECT_EQ(lambda_schedule({2.0, 10.0, 10.0}), 2.0);
  double prev = -1;
  for (int t = 0; t <= 10; ++t) {
    const double l = lambda_schedule({1.5, static_cast<double>(t), 10.0});
    EXPECT_GE(l, prev);
    prev = l;
  }
  EXPECT_THROW(lambda_schedule({-1.0, 1, 2}), dts::Error);
  EXPECT_THROW(lambda_schedule({1.0, 3, 2}), dts::StepOutOfRange);
}

TEST(Modulate, TwoByTwoBoostsPositivePair) {
  std::mt19937_64 gen(4);
  const std::vector<SegmentSpec> segs{segment(2, 2, {0}, {0}, 1.0)};  // relative size 0.25 on area 4
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = random_matrix(2, 3, gen), k = random_matrix(2, 3, gen);
    const auto a = base_attention(q, k);
    const auto m = modulate(q, k, segs, {25.0, 1.0, 1.0}, 4.0);
    EXPECT_GE(m(0, 0), a(0, 0) - 1e-15);
    EXPECT_LE(m(0, 1), a(0, 1) + 1e-15);
  }
}

TEST(Modulate, Properties) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto q = random_matrix(8, 4, gen), k = random_matrix(8, 4, gen);
    std::vector<std::size_t> q0, q1, k0, k1;
    for (std::size_t i = 0; i < 8; ++i) {
      if (gen() % 3 == 0) q0.push_back(i);
      else if (gen() % 2 == 0) q1.push_back(i);
      const auto owner = gen() % 3;
      if (owner == 0) k0.push_back(i);
      if (owner == 1) k1.push_back(i);
    }
    const std::vector<SegmentSpec> segs{segment(8, 8, q0, k0), segment(8, 8, q1, k1)};
    const auto a = base_attention(q, k);
    EXPECT_EQ(modulate(q, k, segs, {1.0, 0.0, 1.0}, 8.0), a);
    EXPECT_EQ(modulate(q, k, {}, {1.0, 1.0, 1.0}, 8.0), a);

    const auto raw = scores(q, k);
    const auto r = build_condition_map(segs, 8, 8);
    Matrix prev = raw;
    for (double lam : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const auto mod = modulated_scores(q, k, segs, {lam, 1.0, 1.0}, 8.0);
      const auto am = softmax_rows(mod, 0.5);
      for (std::size_t i = 0; i < 8; ++i) {
        double sum = 0;
        for (double v : am.row(i)) sum += v;
        EXPECT_NEAR(sum, 1.0, 1e-9);
        const auto row = raw.row(i);
        const double hi = *std::max_element(row.begin(), row.end());
        const double lo = *std::min_element(row.begin(), row.end());
        for (std::size_t j = 0; j < 8; ++j) {
          if (r(i, j) == 1.0) {
            EXPECT_GE(mod(i, j), prev(i, j));
            if (lam <= 1.0) {
              EXPECT_LE(mod(i, j), hi + 1e-12);
            }
          } else if (lam <= 1.0) {
            EXPECT_GE(mod(i, j), lo - 1e-12);
          }
        }
      }
      prev = mod;
    }
  }
}

TEST(Modulate, SingleAttractorRowIsMonotoneInLambda) {
  // With one positive key per row, A'[i,j] for that key is nondecreasing in lambda.
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = random_matrix(4, 4, gen), k = random_matrix(4, 4, gen);
    const std::vector<SegmentSpec> segs{segment(4, 4, {0, 1}, {2}), segment(4, 4, {2, 3}, {0})};
    double prev0 = 0, prev2 = 0;
    for (double lam = 0.0; lam <= 3.0; lam += 0.25) {
      const auto m = modulate(q, k, segs, {lam, 1.0, 1.0}, 16.0);
      EXPECT_GE(m(0, 2), prev0 - 1e-15);
      EXPECT_GE(m(2, 0), prev2 - 1e-15);
      prev0 = m(0, 2);
      prev2 = m(2, 0);
    }
  }
}

TEST(Modulate, FullSizeSegmentLeavesRowsUntouched) {
  std::mt19937_64 gen(10);
  const auto q = random_matrix(6, 3, gen), k = random_matrix(6, 3, gen);
  const std::vector<SegmentSpec> segs{segment(6, 6, {0, 1, 2}, {0, 1}, 6.0), segment(6, 6, {3, 4}, {2, 3})};
  const auto a = base_attention(q, k);
  const auto m = modulate(q, k, segs, {3.0, 1.0, 1.0}, 6.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(m(i, j), a(i, j));
  bool changed = false;
  for (std::size_t j = 0; j < 6; ++j) changed |= m(3, j) != a(3, j);
  EXPECT_TRUE(changed);
}
