#include "dts/schedule.hpp"

#include <cmath>
#include <string>

#include "dts/error.hpp"

namespace dts {

NoiseSchedule NoiseSchedule::linear(int steps, int train_steps, double beta_start, double beta_end) {
  if (train_steps < 1 || steps < 1 || steps > train_steps)
    throw Error("schedule needs 1 <= steps <= train_steps");
  std::vector<double> train(static_cast<std::size_t>(train_steps) + 1, 1.0);
  for (int k = 1; k <= train_steps; ++k) {
    const double beta =
        train_steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * (k - 1) / (train_steps - 1);
    train[k] = train[k - 1] * (1.0 - beta);
  }
  std::vector<double> ab(static_cast<std::size_t>(steps) + 1);
  for (int t = 0; t <= steps; ++t) {
    const auto idx = static_cast<std::size_t>(std::lround(static_cast<double>(t) * train_steps / steps));
    ab[t] = train[idx];
  }
  return from_alpha_bar(std::move(ab));
}

NoiseSchedule NoiseSchedule::from_alpha_bar(std::vector<double> ab) {
  if (ab.size() < 2) throw Error("schedule needs at least one step");
  if (ab.front() != 1.0) throw Error("alpha_bar[0] must be 1");
  for (std::size_t t = 1; t < ab.size(); ++t)
    if (!(ab[t] < ab[t - 1])) throw Error("alpha_bar must be strictly decreasing (t=" + std::to_string(t) + ")");
  if (!(ab.back() > 0.0)) throw Error("alpha_bar[T] must be positive");
  return NoiseSchedule(std::move(ab));
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) throw StepOutOfRange("step " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + "]");
  return alpha_bar_[static_cast<std::size_t>(t)];
}

int NoiseSchedule::index_for(double normalized) const {
  if (!(normalized >= 0.0 && normalized <= 1.0)) throw StepOutOfRange("normalized timestep must lie in [0, 1]");
  return static_cast<int>(std::lround(normalized * steps()));
}

}  // namespace dts
