#pragma once

#include <span>

#include "platoon/env.h"

namespace platoon {

/// Weights of the two-branch (absolute / quadratic) platoon reward.
struct RewardWeights {
  double a = 0.1;  // velocity error weight
  double b = 0.1;  // control input weight
  double c = 0.2;  // jerk weight
  double threshold = -0.4483;       // epsilon; the absolute branch is used below it
  double nominal_gap_error = 15.0;  // m
  double nominal_velocity_error = 10.0;  // m/s
  double scale = 5e-3;  // lambda, quadratic branch only
  double discount = 1.0;

  void Validate() const;
  bool operator==(const RewardWeights&) const = default;
};

/// Absolute-value branch on its own. Always <= 0.
double AbsoluteReward(double gap_error, double velocity_error, double input, double jerk,
                      double accel_max, double input_max, double step_interval,
                      const RewardWeights& weights);

/// Quadratic branch on its own. Always <= 0.
double QuadraticReward(double gap_error, double velocity_error, double input, double jerk,
                       double step_interval, const RewardWeights& weights);

/// Huber-style reward: the absolute branch when it falls below the threshold,
/// the quadratic branch otherwise. Throws std::invalid_argument on non-finite
/// inputs.
double Reward(double gap_error, double velocity_error, double input, double jerk,
              double accel_max, double input_max, double step_interval,
              const RewardWeights& weights);

/// Reward of applying `input` in observation `obs` for follower `vehicle_index`.
double StepReward(const FollowerObservation& obs, double input, const PlatoonConfig& config,
                  int vehicle_index, const RewardWeights& weights);

/// Discounted sum of rewards, first reward undiscounted.
double EpisodeReturn(std::span<const double> rewards, double discount);

inline constexpr double kMyopicGridResolution = 1e-3;

/// Terminal-step policy: the input on a 1e-3 grid over the input limits that
/// maximizes the immediate reward. Ties go to the smaller |u|.
double MyopicAction(const FollowerObservation& obs, const PlatoonConfig& config,
                    int vehicle_index, const RewardWeights& weights);

/// Immediate reward under MyopicAction; the terminal value R_K.
double TerminalReward(const FollowerObservation& obs, const PlatoonConfig& config,
                      int vehicle_index, const RewardWeights& weights);

}  // namespace platoon
