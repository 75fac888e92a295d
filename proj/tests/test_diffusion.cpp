#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>

#include "dts/diffusion.hpp"
#include "dts/error.hpp"
#include "support.hpp"

using namespace dts;

namespace {

NoiseSchedule three_level() { return NoiseSchedule::from_alpha_bar({1.0, 0.8, 0.5}); }

ViewCondition blank(const LatentTensor& x) { return blank_condition(x.dims().extent()); }

// Backends for failure and concurrency checks.
class WrongShape final : public Denoiser {
 public:
  Capabilities capabilities() const override { return {"wrong-shape", false, true, 0, {}}; }
  LatentTensor predict_epsilon(const LatentTensor&, int, const NoiseSchedule&, const ViewCondition&) override {
    return LatentTensor({1, 1, 1});
  }
};

class NonFinite final : public Denoiser {
 public:
  Capabilities capabilities() const override { return {"nan", false, true, 0, {}}; }
  LatentTensor predict_epsilon(const LatentTensor& x, int, const NoiseSchedule&, const ViewCondition&) override {
    LatentTensor e(x.dims());
    e.values()[0] = NAN;
    return e;
  }
};

class Throwing final : public Denoiser {
 public:
  Capabilities capabilities() const override { return {"throwing", false, true, 0, {}}; }
  LatentTensor predict_epsilon(const LatentTensor&, int, const NoiseSchedule&, const ViewCondition&) override {
    throw std::runtime_error("boom");
  }
};

// Fails on views whose first value is large; used to check which window is reported.
class FailOnMarker final : public Denoiser {
 public:
  Capabilities capabilities() const override { return {"marker", false, true, 0, {}}; }
  LatentTensor predict_epsilon(const LatentTensor& x, int, const NoiseSchedule&, const ViewCondition&) override {
    if (x.values()[0] > 50.0f) throw BackendError("marker hit");
    return LatentTensor(x.dims());
  }
};

class ConcurrencyProbe final : public Denoiser {
 public:
  explicit ConcurrencyProbe(std::size_t limit) : limit_(limit) {}
  Capabilities capabilities() const override { return {"probe", false, true, limit_, {}}; }
  LatentTensor predict_epsilon(const LatentTensor& x, int, const NoiseSchedule&, const ViewCondition&) override {
    const int now = ++active_;
    int prev = peak_.load();
    while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    --active_;
    return LatentTensor(x.dims());
  }
  int peak() const { return peak_; }

 private:
  std::size_t limit_;
  std::atomic<int> active_{0}, peak_{0};
};

// Records every condition it sees.
class ConditionRecorder final : public Denoiser {
 public:
  Capabilities capabilities() const override { return {"recorder", true, true, 1, {"keypoints", "masks"}}; }
  LatentTensor predict_epsilon(const LatentTensor& x, int, const NoiseSchedule&, const ViewCondition& c) override {
    std::lock_guard lock(mu);
    seen.push_back(c);
    return LatentTensor(x.dims());
  }
  std::mutex mu;
  std::vector<ViewCondition> seen;
};

}  // namespace

// ---------------------------------------------------------------------------

TEST(Schedule, LinearMatchesProductOfBetas) {
  const auto s = NoiseSchedule::linear(50);
  ASSERT_EQ(s.steps(), 50);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  for (int t : {1, 7, 25, 50}) {
    const int k = static_cast<int>(std::lround(t * 1000.0 / 50));
    double prod = 1.0;
    for (int i = 0; i < k; ++i) prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * i / 999.0);
    EXPECT_NEAR(s.alpha_bar(t), prod, 1e-14 * prod) << t;
  }
  for (int t = 1; t <= 50; ++t) EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
  EXPECT_EQ(s.index_for(0.5), 25);
  EXPECT_EQ(s.index_for(1.0), 50);
  EXPECT_THROW(s.alpha_bar(51), StepOutOfRange);
  EXPECT_THROW(s.alpha_bar(-1), StepOutOfRange);
}

TEST(Schedule, Validation) {
  EXPECT_THROW(NoiseSchedule::from_alpha_bar({0.9, 0.5}), Error);
  EXPECT_THROW(NoiseSchedule::from_alpha_bar({1.0, 0.5, 0.5}), Error);
  EXPECT_THROW(NoiseSchedule::from_alpha_bar({1.0, 0.0}), Error);
  EXPECT_NO_THROW(three_level());
}

TEST(Rng, StreamsReproducibleAndDistinct) {
  const RngStream s(42);
  std::set<std::uint64_t> seeds;
  for (std::uint32_t p = 0; p < 3; ++p)
    for (std::uint32_t t = 0; t < 20; ++t)
      for (std::uint32_t w = 0; w < 20; ++w) {
        const StreamKey k{StreamPurpose::Denoise, p, t, w};
        EXPECT_EQ(s.derive_seed(k), RngStream(42).derive_seed(k));
        seeds.insert(s.derive_seed(k));
      }
  EXPECT_EQ(seeds.size(), 3u * 20 * 20);
  EXPECT_NE(s.derive_seed({StreamPurpose::Init, 0, 0, 0}), s.derive_seed({StreamPurpose::Forward, 0, 0, 0}));
  EXPECT_NE(RngStream(1).derive_seed({}), RngStream(2).derive_seed({}));
}

TEST(Rng, Distributions) {
  Rng r(7);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  std::array<int, 5> hist{};
  for (int i = 0; i < 50000; ++i) {
    const auto v = r.uniform_int(-2, 2);
    ASSERT_GE(v, -2);
    ASSERT_LE(v, 2);
    hist[static_cast<std::size_t>(v + 2)]++;
  }
  for (int h : hist) EXPECT_NEAR(h, 10000, 4 * std::sqrt(10000 * 0.8));
}

TEST(ForwardNoise, ZeroStepIsIdentity) {
  const auto s = NoiseSchedule::linear(20);
  const auto z = test::random_tensor({4, 4, 2}, 1);
  Rng rng(3);
  EXPECT_TRUE(test::bit_equal(forward_noise(z, 0, s, rng), z));
  EXPECT_THROW(forward_noise(z, 21, s, rng), StepOutOfRange);
}

TEST(ForwardNoise, MomentsAtFinalStep) {
  const auto s = NoiseSchedule::linear(20);
  const LatentTensor z({100, 100, 10});  // 1e5 draws
  Rng rng(5);
  const auto x = forward_noise(z, 20, s, rng);
  const double n = static_cast<double>(x.size());
  double sum = 0, sq = 0;
  for (float v : x.values()) sum += v, sq += static_cast<double>(v) * v;
  const double var = 1.0 - s.alpha_bar(20);
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 3 * std::sqrt(var / n));
  EXPECT_NEAR(sq / n - mean * mean, var, 3 * var * std::sqrt(2.0 / n));
  Rng again(5);
  EXPECT_TRUE(test::bit_equal(forward_noise(z, 20, s, again), x));
}

TEST(AnalyticEpsilon, MatchesPosteriorFormula) {
  const auto s = NoiseSchedule::linear(40);
  const auto x = test::random_tensor({6, 6, 2}, 9, -4, 4);
  for (const GaussianPrior prior : {GaussianPrior{0, 1}, GaussianPrior{2, 1}, GaussianPrior{-1.5, 0.3}}) {
    for (int t : {1, 10, 40}) {
      const double a = s.alpha_bar(t);
      const double v0 = prior.stddev * prior.stddev;
      const auto eps = analytic_gaussian_epsilon(x, t, prior, s);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double xt = x.values()[i];
        const double ex0 = (std::sqrt(a) * v0 * xt + (1 - a) * prior.mean) / (a * v0 + 1 - a);
        const double want = (xt - std::sqrt(a) * ex0) / std::sqrt(1 - a);
        EXPECT_NEAR(eps.values()[i], want, 1e-5 * (1 + std::abs(want)));
      }
    }
  }
}

TEST(AnalyticEpsilon, StandardPriorSimplifies) {
  const auto s = NoiseSchedule::linear(10);
  const auto x = test::random_tensor({3, 3, 1}, 2);
  const auto eps = analytic_gaussian_epsilon(x, 4, {0, 1}, s);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(eps.values()[i], std::sqrt(1 - s.alpha_bar(4)) * x.values()[i], 1e-6);
  // first step keeps eps finite
  EXPECT_TRUE(analytic_gaussian_epsilon(x, 1, {5, 0.01}, s).all_finite());
}

TEST(DenoiseStep, HandEvaluatedValue) {
  // eps = sqrt(0.5), x0 = (1 - 0.5)/sqrt(0.5), x_prev = sqrt(0.8) x0 + sqrt(0.2) eps = sqrt(0.9)
  AnalyticGaussianDenoiser analytic({0, 1});
  const LatentTensor x({1, 1, 1}, 1.0f);
  Rng rng(0);
  const auto out = denoise_step(x, 2, blank(x), analytic, three_level(), rng);
  EXPECT_NEAR(out.values()[0], 0.9486832980505138, 1e-6);
}

TEST(DenoiseStep, ZeroBackendCollapses) {
  ZeroDenoiser zero;
  const auto s = NoiseSchedule::linear(30);
  const auto x = test::random_tensor({4, 5, 3}, 4);
  Rng rng(0);
  const auto out = denoise_step(x, 12, blank(x), zero, s, rng);
  const double f = std::sqrt(s.alpha_bar(11)) / std::sqrt(s.alpha_bar(12));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out.values()[i], f * x.values()[i], 1e-6);
  Rng rng2(0);
  EXPECT_TRUE(test::bit_equal(denoise_step(x, 12, blank(x), zero, s, rng2), out));
}

TEST(DenoiseStep, EtaAddsNoiseFromTheStream) {
  MockDenoiser mock;
  const auto s = NoiseSchedule::linear(30);
  const auto x = test::random_tensor({4, 4, 1}, 4);
  Rng a(1), b(1), c(2);
  const auto x1 = denoise_step(x, 10, blank(x), mock, s, a, {1.0});
  EXPECT_TRUE(test::bit_equal(denoise_step(x, 10, blank(x), mock, s, b, {1.0}), x1));
  EXPECT_FALSE(test::bit_equal(denoise_step(x, 10, blank(x), mock, s, c, {1.0}), x1));
}

TEST(DenoiseStep, Errors) {
  const auto s = NoiseSchedule::linear(10);
  const auto x = test::random_tensor({2, 2, 1}, 1);
  Rng rng(0);
  MockDenoiser mock;
  WrongShape wrong;
  NonFinite nan;
  Throwing throwing;
  EXPECT_THROW(denoise_step(x, 0, blank(x), mock, s, rng), StepOutOfRange);
  EXPECT_THROW(denoise_step(x, 11, blank(x), mock, s, rng), StepOutOfRange);
  EXPECT_THROW(denoise_step(x, 3, blank(x), wrong, s, rng), BackendError);
  EXPECT_THROW(denoise_step(x, 3, blank(x), nan, s, rng), BackendError);
  EXPECT_THROW(denoise_step(x, 3, blank(x), throwing, s, rng), BackendError);
}

TEST(Vcjd, DegenerateTilingMatchesSequential) {
  const auto s = NoiseSchedule::linear(25);
  AnalyticGaussianDenoiser analytic({1.5, 0.7});
  ZeroDenoiser zero;
  MockDenoiser mock;
  const auto z = initial_noise({20, 28, 3}, 99);
  const auto plan = single_window_plan({20, 28});
  for (Denoiser* b : std::initializer_list<Denoiser*>{&analytic, &zero, &mock})
    for (double eta : {0.0, 0.5}) {
      VcjdOptions o;
      o.eta = eta;
      const auto joint = vcjd(z, ConditionSet{}, 25, plan, *b, s, 7, o);
      const auto seq = sample_sequential(z, blank(z), 25, *b, s, 7, o);
      EXPECT_TRUE(test::bit_equal(joint, seq)) << b->capabilities().name << " eta=" << eta;
    }
}

TEST(Vcjd, MatchesStraightLineOracle) {
  const auto s = NoiseSchedule::linear(12);
  MockDenoiser mock;
  const Extent canvas{30, 22};
  const auto plan = plan_windows(canvas, {16, 12}, 7);
  const auto z0 = initial_noise({30, 22, 2}, 5);
  const RngStream streams(3);

  // oracle: crop every window, denoise, accumulate per pixel in double, divide
  LatentTensor z = z0;
  for (int t = 12; t >= 1; --t) {
    std::vector<double> sum(z.size(), 0.0), cnt(canvas.area(), 0.0);
    for (const auto& w : plan.windows) {
      LatentTensor x({w.size.height, w.size.width, 2});
      for (std::size_t r = 0; r < w.size.height; ++r)
        for (std::size_t c = 0; c < w.size.width; ++c)
          for (std::size_t ch = 0; ch < 2; ++ch) x.at(r, c, ch) = z.at(w.row + r, w.col + c, ch);
      Rng rng = streams.at({StreamPurpose::Denoise, 0, static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(w.index)});
      const auto y = denoise_step(x, t, blank(x), mock, s, rng);
      for (std::size_t r = 0; r < w.size.height; ++r)
        for (std::size_t c = 0; c < w.size.width; ++c) {
          const std::size_t p = (w.row + r) * canvas.width + w.col + c;
          cnt[p] += 1;
          for (std::size_t ch = 0; ch < 2; ++ch) sum[p * 2 + ch] += y.at(r, c, ch);
        }
    }
    for (std::size_t i = 0; i < z.size(); ++i) z.values()[i] = static_cast<float>(sum[i] / cnt[i / 2]);
  }
  const auto got = vcjd(z0, ConditionSet{}, 12, plan, mock, s, 3);
  for (std::size_t i = 0; i < z.size(); ++i) ASSERT_NEAR(got.values()[i], z.values()[i], 1e-12) << i;
}

TEST(Vcjd, ConstantViewsAverageInOverlap) {
  const auto s = three_level();
  ZeroDenoiser zero;
  const Extent canvas{4, 6};
  std::vector<View> views{{LatentTensor({4, 4, 1}, 1.0f), Window{0, 0, 0, {4, 4}}},
                          {LatentTensor({4, 4, 1}, 3.0f), Window{1, 0, 2, {4, 4}}}};
  std::vector<ViewCondition> conds{blank_condition({4, 4}), blank_condition({4, 4})};
  const auto out = vcjd_step(views, 2, conds, zero, s, RngStream(0), canvas);
  const float f = static_cast<float>(std::sqrt(0.8) / std::sqrt(0.5));
  const float a = 1.0f * f, b = 3.0f * f;
  EXPECT_NEAR(out[0].latent.at(0, 0, 0), a, 1e-6);
  EXPECT_NEAR(out[0].latent.at(0, 2, 0), 0.5 * (a + b), 1e-6);
  EXPECT_NEAR(out[1].latent.at(0, 0, 0), 0.5 * (a + b), 1e-6);
  EXPECT_NEAR(out[1].latent.at(0, 3, 0), b, 1e-6);
}

TEST(Vcjd, DeterministicAcrossThreadsAndOrders) {
  const auto s = NoiseSchedule::linear(15);
  MockDenoiser mock;
  const Extent canvas{40, 36};
  const auto plan = plan_windows(canvas, {16, 16}, 8);
  const auto z = initial_noise({40, 36, 2}, 11);
  VcjdOptions one;
  one.threads = 1;
  one.eta = 0.3;
  VcjdOptions many = one;
  many.threads = 4;
  VcjdOptions before = one;
  before.order = StitchOrder::BeforeDenoise;
  const auto a = vcjd(z, ConditionSet{}, 15, plan, mock, s, 2, one);
  EXPECT_TRUE(test::bit_equal(vcjd(z, ConditionSet{}, 15, plan, mock, s, 2, one), a));
  EXPECT_TRUE(test::bit_equal(vcjd(z, ConditionSet{}, 15, plan, mock, s, 2, many), a));
  EXPECT_TRUE(test::bit_equal(vcjd(z, ConditionSet{}, 15, plan, mock, s, 2, before), a));
  EXPECT_FALSE(test::bit_equal(vcjd(z, ConditionSet{}, 15, plan, mock, s, 3, one), a));
}

TEST(Vcjd, RespectsBackendConcurrencyLimit) {
  const auto s = NoiseSchedule::linear(3);
  const auto plan = plan_windows({32, 32}, {8, 8}, 8);  // 16 windows
  const auto z = initial_noise({32, 32, 1}, 1);
  VcjdOptions o;
  o.threads = 8;
  ConcurrencyProbe limited(2);
  vcjd(z, ConditionSet{}, 3, plan, limited, s, 0, o);
  EXPECT_LE(limited.peak(), 2);
  ConcurrencyProbe serial(1);
  vcjd(z, ConditionSet{}, 3, plan, serial, s, 0, o);
  EXPECT_EQ(serial.peak(), 1);
}

TEST(Vcjd, ErrorsNameTheWindow) {
  const auto s = NoiseSchedule::linear(5);
  const auto plan = plan_windows({16, 16}, {8, 8}, 8);
  auto z = LatentTensor({16, 16, 1});
  z.at(0, 8, 0) = 100.0f;  // first value of window 1
  z.at(8, 8, 0) = 100.0f;  // first value of window 3
  FailOnMarker marker;
  VcjdOptions o;
  o.threads = 4;
  try {
    vcjd(z, ConditionSet{}, 5, plan, marker, s, 0, o);
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("window 1:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(vcjd(z, ConditionSet{}, 0, plan, marker, s, 0), StepOutOfRange);
  EXPECT_THROW(vcjd(z, ConditionSet{}, 6, plan, marker, s, 0), StepOutOfRange);
}

TEST(Vcjd, PassesCroppedConditions) {
  const auto s = NoiseSchedule::linear(2);
  ConditionSet cs;
  cs.global_caption = "two people";
  cs.keypoint_map = LatentTensor({8, 16, 1});
  Mask m({8, 16});
  m.at(2, 2) = 1;
  cs.dense_pairs.push_back({"left person", m});
  const auto plan = plan_windows({8, 16}, {8, 8}, 8);
  ConditionRecorder rec;
  vcjd(LatentTensor({8, 16, 1}), cs, 2, plan, rec, s, 0);
  ASSERT_EQ(rec.seen.size(), 4u);
  std::size_t with_pair = 0;
  for (const auto& c : rec.seen) {
    EXPECT_EQ(c.full_text, "two people");
    with_pair += c.dense_pairs.size();
  }
  EXPECT_EQ(with_pair, 2u);  // window 0 at both steps
}

TEST(Vcjd, AnalyticTargetMeanOnWideCanvas) {
  // 240x320 canvas, two overlapping windows, N(2, 1) target. Starting from
  // N(0, 1) rather than the exact marginal at T leaves a deterministic offset
  // of about sqrt(alpha_bar_T) * mu, so the sample mean is compared with the
  // sampler's exact mean, which (the sampler being affine per pixel) is its
  // image of a zero start.
  const auto s = NoiseSchedule::linear(50);
  AnalyticGaussianDenoiser analytic({2.0, 1.0});
  const Extent canvas{240, 320};
  const auto plan = plan_windows(canvas, {240, 200}, 120);
  ASSERT_EQ(plan.windows.size(), 2u);
  const auto z = vcjd(initial_noise({240, 320, 1}, 2024), ConditionSet{}, 50, plan, analytic, s, 2024);
  double sum = 0;
  for (float v : z.values()) sum += v;
  const double n = static_cast<double>(z.size());
  const double delta = 4.0 / std::sqrt(n);

  const auto centre = vcjd(LatentTensor({240, 320, 1}), ConditionSet{}, 50, plan, analytic, s, 2024);
  const double exact_mean = centre.values()[0];
  EXPECT_NEAR(sum / n, exact_mean, delta);
  EXPECT_NEAR(exact_mean, 2.0 - 2.0 * std::sqrt(s.alpha_bar(50)), 1e-3);
}
