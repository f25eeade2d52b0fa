#include "platoon/reward.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace platoon {

void RewardWeights::Validate() const {
  if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw std::invalid_argument("RewardWeights: a, b, c must be > 0");
  if (!(scale > 0.0)) throw std::invalid_argument("RewardWeights: scale must be > 0");
  if (!(threshold < 0.0)) throw std::invalid_argument("RewardWeights: threshold must be < 0");
  if (!(nominal_gap_error > 0.0 && nominal_velocity_error > 0.0)) {
    throw std::invalid_argument("RewardWeights: nominal errors must be > 0");
  }
  if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("RewardWeights: discount must be in (0, 1]");
}

double AbsoluteReward(double gap_error, double velocity_error, double input, double jerk,
                      double accel_max, double input_max, double step_interval,
                      const RewardWeights& w) {
  const double jerk_range = 2.0 * accel_max / step_interval;
  return -(std::abs(gap_error / w.nominal_gap_error) +
           w.a * std::abs(velocity_error / w.nominal_velocity_error) +
           w.b * std::abs(input / input_max) + w.c * std::abs(jerk / jerk_range));
}

double QuadraticReward(double gap_error, double velocity_error, double input, double jerk,
                       double step_interval, const RewardWeights& w) {
  const double jt = jerk * step_interval;
  return -w.scale * (gap_error * gap_error + w.a * velocity_error * velocity_error +
                     w.b * input * input + w.c * jt * jt);
}

double Reward(double gap_error, double velocity_error, double input, double jerk,
              double accel_max, double input_max, double step_interval, const RewardWeights& w) {
  if (!std::isfinite(gap_error) || !std::isfinite(velocity_error) || !std::isfinite(input) ||
      !std::isfinite(jerk)) {
    throw std::invalid_argument("Reward: non-finite input");
  }
  const double r_abs =
      AbsoluteReward(gap_error, velocity_error, input, jerk, accel_max, input_max, step_interval, w);
  if (r_abs < w.threshold) return r_abs;
  return QuadraticReward(gap_error, velocity_error, input, jerk, step_interval, w);
}

double StepReward(const FollowerObservation& obs, double input, const PlatoonConfig& config,
                  int vehicle_index, const RewardWeights& weights) {
  const double jerk = Jerk(obs.local.accel, input, config.tau.at(static_cast<size_t>(vehicle_index)));
  return Reward(obs.local.gap_error, obs.local.velocity_error, input, jerk, config.accel_max,
                config.input_max, config.step_interval, weights);
}

double EpisodeReturn(std::span<const double> rewards, double discount) {
  double total = 0.0;
  double factor = 1.0;
  for (double r : rewards) {
    total += factor * r;
    factor *= discount;
  }
  return total;
}

double MyopicAction(const FollowerObservation& obs, const PlatoonConfig& config,
                    int vehicle_index, const RewardWeights& weights) {
  const double cell = kMyopicGridResolution;
  // Grid points are integer multiples of the cell so that u = 0 is always a
  // candidate; they are visited in order of increasing |u|.
  const long lo = static_cast<long>(std::ceil(config.input_min / cell - 1e-9));
  const long hi = static_cast<long>(std::floor(config.input_max / cell + 1e-9));
  double best_u = 0.0;
  double best_r = -std::numeric_limits<double>::infinity();
  auto consider = [&](long i) {
    if (i < lo || i > hi) return;
    const double u = static_cast<double>(i) * cell;
    const double r = StepReward(obs, u, config, vehicle_index, weights);
    if (r > best_r) {
      best_r = r;
      best_u = u;
    }
  };
  const long reach = std::max(std::abs(lo), std::abs(hi));
  if (lo <= 0 && hi >= 0) {
    consider(0);
  }
  for (long n = 1; n <= reach; ++n) {
    consider(n);
    consider(-n);
  }
  return best_u;
}

double TerminalReward(const FollowerObservation& obs, const PlatoonConfig& config,
                      int vehicle_index, const RewardWeights& weights) {
  return StepReward(obs, MyopicAction(obs, config, vehicle_index, weights), config, vehicle_index,
                    weights);
}

}  // namespace platoon
