#include <cmath>

#include "dts/denoiser.hpp"
#include "dts/error.hpp"
#include "dts/simd.hpp"

namespace dts {

LatentTensor analytic_gaussian_epsilon(const LatentTensor& x_t, int t, const GaussianPrior& prior,
                                       const NoiseSchedule& schedule) {
  if (!(prior.stddev > 0.0)) throw Error("prior stddev must be positive");
  const double a = schedule.alpha_bar(t);
  const double var0 = prior.stddev * prior.stddev;
  // Marginal variance of x_t; E[x0|x_t] is affine in x_t, so eps is too.
  const double v = a * var0 + (1.0 - a);
  const double scale = std::sqrt(1.0 - a) / v;
  const double offset = -std::sqrt(a) * std::sqrt(1.0 - a) * prior.mean / v;
  LatentTensor eps(x_t.dims());
  simd::active().affine(eps.values(), x_t.values(), static_cast<float>(scale), static_cast<float>(offset));
  return eps;
}

AnalyticGaussianDenoiser::AnalyticGaussianDenoiser(GaussianPrior prior) : prior_(prior) {
  if (!(prior_.stddev > 0.0)) throw Error("prior stddev must be positive");
}

Capabilities AnalyticGaussianDenoiser::capabilities() const {
  return {"analytic-gaussian", false, true, 0, {}};
}

LatentTensor AnalyticGaussianDenoiser::predict_epsilon(const LatentTensor& x_t, int t, const NoiseSchedule& schedule,
                                                       const ViewCondition&) {
  return analytic_gaussian_epsilon(x_t, t, prior_, schedule);
}

Capabilities ZeroDenoiser::capabilities() const { return {"zero", false, true, 0, {}}; }

LatentTensor ZeroDenoiser::predict_epsilon(const LatentTensor& x_t, int, const NoiseSchedule&, const ViewCondition&) {
  return LatentTensor(x_t.dims());
}

float mock_epsilon_value(float x, double alpha_bar) {
  return static_cast<float>(std::tanh(static_cast<double>(x)) * std::sqrt(1.0 - alpha_bar));
}

Capabilities MockDenoiser::capabilities() const { return {"mock-tanh", false, true, 0, {}}; }

LatentTensor MockDenoiser::predict_epsilon(const LatentTensor& x_t, int t, const NoiseSchedule& schedule,
                                           const ViewCondition&) {
  const double a = schedule.alpha_bar(t);
  LatentTensor eps(x_t.dims());
  auto in = x_t.values();
  auto out = eps.values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = mock_epsilon_value(in[i], a);
  return eps;
}

}  // namespace dts
