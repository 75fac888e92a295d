#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dts/conditions.hpp"
#include "dts/schedule.hpp"
#include "dts/tensor.hpp"

namespace dts {

struct Capabilities {
  std::string name;
  bool accepts_conditions = false;
  bool deterministic = true;
  /// Concurrent predict_epsilon calls allowed; 0 means unbounded.
  std::size_t max_concurrency = 1;
  std::vector<std::string> condition_kinds;
};

/// Noise predictor behind the sampler. Implementations must return the same
/// prediction for identical (x_t, t, schedule, condition).
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Capabilities capabilities() const = 0;
  virtual LatentTensor predict_epsilon(const LatentTensor& x_t, int t, const NoiseSchedule& schedule,
                                       const ViewCondition& condition) = 0;
};

struct GaussianPrior {
  double mean = 0.0;
  double stddev = 1.0;
};

/// Exact epsilon prediction for data x0 ~ N(mean, stddev^2 I).
LatentTensor analytic_gaussian_epsilon(const LatentTensor& x_t, int t, const GaussianPrior& prior,
                                       const NoiseSchedule& schedule);

class AnalyticGaussianDenoiser final : public Denoiser {
 public:
  explicit AnalyticGaussianDenoiser(GaussianPrior prior);
  Capabilities capabilities() const override;
  LatentTensor predict_epsilon(const LatentTensor& x_t, int t, const NoiseSchedule& schedule,
                               const ViewCondition& condition) override;
  const GaussianPrior& prior() const { return prior_; }

 private:
  GaussianPrior prior_;
};

/// Always predicts zero noise.
class ZeroDenoiser final : public Denoiser {
 public:
  Capabilities capabilities() const override;
  LatentTensor predict_epsilon(const LatentTensor& x_t, int t, const NoiseSchedule& schedule,
                               const ViewCondition& condition) override;
};

/// eps = tanh(x_t) * sqrt(1 - alpha_bar_t), evaluated in double and rounded
/// to f32. The external mock service implements the same rule.
float mock_epsilon_value(float x, double alpha_bar);

class MockDenoiser final : public Denoiser {
 public:
  Capabilities capabilities() const override;
  LatentTensor predict_epsilon(const LatentTensor& x_t, int t, const NoiseSchedule& schedule,
                               const ViewCondition& condition) override;
};

}  // namespace dts
