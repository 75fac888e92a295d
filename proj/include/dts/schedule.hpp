#pragma once

#include <span>
#include <vector>

namespace dts {

/// Cumulative signal levels alpha_bar[t], t = 0..T, with alpha_bar[0] = 1.
class NoiseSchedule {
 public:
  /// Linear-beta training schedule of `train_steps` steps, sampled at `steps`
  /// evenly spaced indices (sampling step t -> training index round(t * train_steps / steps)).
  static NoiseSchedule linear(int steps, int train_steps = 1000, double beta_start = 1e-4, double beta_end = 0.02);

  /// Validates: [0] == 1, strictly decreasing, last > 0.
  static NoiseSchedule from_alpha_bar(std::vector<double> alpha_bar);

  int steps() const { return static_cast<int>(alpha_bar_.size()) - 1; }
  double alpha_bar(int t) const;
  std::span<const double> alpha_bars() const { return alpha_bar_; }

  /// Normalized timestep in [0, 1] -> schedule index round(tau * T).
  int index_for(double normalized) const;

 private:
  explicit NoiseSchedule(std::vector<double> ab) : alpha_bar_(std::move(ab)) {}
  std::vector<double> alpha_bar_;
};

}  // namespace dts
