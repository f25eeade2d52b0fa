#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "platoon/env.h"

namespace platoon {

/// Leader velocity profile sampled every T seconds plus the acceleration and
/// control input reconstructed from it.
struct LeaderTrace {
  std::string episode_id;
  std::vector<double> velocity;  // m/s, n samples
  std::vector<double> accel;     // m/s^2, n-1 samples
  std::vector<double> input;     // m/s^2, n-2 samples

  bool operator==(const LeaderTrace&) const = default;
};

struct LeaderInputs {
  std::vector<double> accel;
  std::vector<double> input;
};

/// Forward-difference acceleration and inverted driveline input, both clipped
/// to the vehicle limits. Requires at least three samples.
LeaderInputs DeriveLeaderInputs(const std::vector<double>& velocity, const PlatoonConfig& config);

/// Builds a trace (id, velocity, derived inputs) and checks its length against
/// the episode horizon.
LeaderTrace MakeLeaderTrace(std::string episode_id, std::vector<double> velocity,
                            const PlatoonConfig& config);

/// Reads `episode_id,step,v` rows (header required). Throws std::runtime_error
/// naming the offending line or episode.
std::vector<LeaderTrace> LoadTraces(const std::filesystem::path& path, const PlatoonConfig& config);

void SaveTraces(const std::filesystem::path& path, const std::vector<LeaderTrace>& traces);

/// Seeded shuffle, then the first floor(ratio * n) traces go to training.
std::pair<std::vector<LeaderTrace>, std::vector<LeaderTrace>> SplitTraces(
    const std::vector<LeaderTrace>& traces, double ratio, uint64_t seed);

struct SyntheticTraceOptions {
  double min_initial_speed = 10.0;  // m/s
  double max_initial_speed = 25.0;
  double accel_reversion = 0.05;  // per-step mean reversion of the acceleration
  double accel_volatility = 0.1;  // m/s^2 per step
};

/// Random-walk leaders with smoothed (Ornstein-Uhlenbeck) acceleration, K+2
/// samples each, v >= 0 and |acc| <= acc_max.
std::vector<LeaderTrace> GenerateSyntheticTraces(int num_episodes, const PlatoonConfig& config,
                                                 uint64_t seed,
                                                 const SyntheticTraceOptions& options = {});

}  // namespace platoon
