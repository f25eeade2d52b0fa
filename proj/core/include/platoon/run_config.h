#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "platoon/ddpg.h"
#include "platoon/env.h"
#include "platoon/fh.h"
#include "platoon/reward.h"

namespace platoon {

/// Network widths and learner settings for one family of algorithms.
struct LearnerConfig {
  DdpgConfig ddpg;
  std::vector<int> hidden;

  bool operator==(const LearnerConfig&) const = default;
};

struct DataConfig {
  std::string traces;  // CSV path; empty selects synthetic traces
  int synthetic_episodes = 1000;
  uint64_t synthetic_seed = 7;
  double train_ratio = 0.8;
  uint64_t split_seed = 1;

  bool operator==(const DataConfig&) const = default;
};

/// Everything a run depends on besides the algorithm and the seed.
struct RunConfig {
  PlatoonConfig platoon;
  RewardWeights reward;
  LearnerConfig fh;        // per-step and stationary learners
  LearnerConfig baseline;  // plain DDPG
  int threshold = 11;      // m
  double gap_error_max = 2.0;
  double velocity_error_max = 1.5;
  SsConfig ss;
  DataConfig data;
  int test_episodes = 200;
  uint64_t seed = 1;

  void Validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// The full-scale parameterization.
RunConfig DefaultRunConfig();
/// Reduced networks and budgets on synthetic traces.
RunConfig DeskRunConfig();

/// INI text with one section per parameter group. Doubles are written with
/// enough digits to read back exactly.
std::string FormatRunConfig(const RunConfig& config);
/// Starts from `base` and applies the file's keys. Unknown sections or keys,
/// malformed values and invariant violations throw std::runtime_error.
RunConfig ParseRunConfig(const std::string& text, const RunConfig& base = DefaultRunConfig());

void SaveRunConfig(const std::filesystem::path& path, const RunConfig& config);
RunConfig LoadRunConfig(const std::filesystem::path& path, const RunConfig& base = DefaultRunConfig());

/// "default", "desk" or a file path.
RunConfig ResolveRunConfig(const std::string& name_or_path);

}  // namespace platoon
