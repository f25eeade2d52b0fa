#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "platoon/data.h"
#include "platoon/env.h"
#include "platoon/reward.h"

namespace platoon {

/// A follower controller: time step k (1-based) and observation to input.
using Policy = std::function<double(int step, const FollowerObservation& obs)>;

/// Post-processes a policy output before it is applied, e.g. jerk clipping.
using ActionFilter =
    std::function<double(int step, double input, const FollowerObservation& obs, int vehicle_index)>;

struct StepRecord {
  double gap_error = 0.0;
  double velocity_error = 0.0;
  double accel = 0.0;
  double input = 0.0;
  double jerk = 0.0;
  double reward = 0.0;
  double headway = 0.0;   // d = e_p + r + h v
  double velocity = 0.0;  // this follower's speed
  double pred_accel = 0.0;
  double pred_input = 0.0;
};

/// One follower's trajectory over an episode, entry k-1 holding step k.
struct EpisodeLog {
  std::vector<StepRecord> steps;

  std::vector<double> Rewards() const;
};

/// Simulates followers 1..policies.size() behind the leader trace for K steps.
/// Follower 1 observes the leader's (acc, u) from the trace; follower i
/// observes follower i-1's realized values at the same step. Throws
/// std::invalid_argument when the trace is shorter than K or the policy and
/// initial-state counts disagree.
std::vector<EpisodeLog> PlatoonRollout(std::span<const Policy> policies, const LeaderTrace& leader,
                                       std::span<const LocalState> initial_states,
                                       const PlatoonConfig& config, const RewardWeights& weights,
                                       const ActionFilter& filter = {});

/// Leader velocity integrated from the trace's first sample with the trace
/// accelerations, K+1 values.
std::vector<double> LeaderVelocities(const LeaderTrace& leader, const PlatoonConfig& config);

/// `follower,step,e_p,e_v,acc,u,jerk,reward` rows, one per follower per step.
void WriteEpisodeCsv(const std::filesystem::path& path, const std::vector<EpisodeLog>& logs);
std::vector<EpisodeLog> ReadEpisodeCsv(const std::filesystem::path& path);

}  // namespace platoon
