#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "platoon/data.h"
#include "platoon/rollout.h"

namespace platoon {

/// Return statistics of one follower over the test episodes.
struct FollowerStats {
  int episodes = 0;
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  double std = 0.0;  // population standard deviation
};

struct SafetyReport {
  double min_headway = 0.0;              // m
  double most_negative_gap_error = 0.0;  // m; the smallest e_p observed
  int step = 0;                          // where it occurred
  int follower = 0;
  int episode = 0;
  bool collision = false;  // any headway <= 0
};

struct EvalReport {
  int episodes = 0;
  std::vector<FollowerStats> followers;
  double sum_performance = 0.0;  // sum of follower mean returns
  int worst_episode = 0;         // lowest return summed over followers
  SafetyReport safety;
};

/// One entry per test episode, each holding every follower's log.
using EpisodeLogs = std::vector<std::vector<EpisodeLog>>;

struct EvalResult {
  EvalReport report;
  EpisodeLogs logs;
  std::vector<std::string> episode_ids;
};

inline const LocalState kTestInitialState{1.5, -1.0, 0.0};

/// Noise-free rollouts of the platoon on the first `episodes` traces, every
/// follower starting from kTestInitialState. With workers > 1 episodes run on
/// separate threads; the report does not depend on the worker count. Throws
/// std::invalid_argument for an empty or null policy or too few traces.
EvalResult Evaluate(std::span<const Policy> policies, const std::vector<LeaderTrace>& traces,
                    int episodes, const PlatoonConfig& config, const RewardWeights& weights,
                    const ActionFilter& filter = {}, int workers = 1);

/// Return statistics and worst episode from logs alone, so a report can be
/// recomputed from persisted CSV files. Safety fields are left empty.
EvalReport AggregateReport(const EpisodeLogs& logs, double discount);

/// Throws std::invalid_argument on empty logs.
SafetyReport AnalyzeSafety(const EpisodeLogs& logs);

nlohmann::json ToJson(const EvalReport& report);

struct JerkClipOptions {
  double jerk_min = -0.3;  // m/s^3
  double jerk_max = 0.6;
  int threshold = 11;  // clip only for k > threshold
};

/// For k > threshold, limits u to [acc + tau jerk_min, acc + tau jerk_max];
/// the result is always clamped to the input limits.
double JerkClip(double input, double accel, int step, double tau, const PlatoonConfig& config,
                const JerkClipOptions& options = {});

ActionFilter MakeJerkClipFilter(const PlatoonConfig& config, const JerkClipOptions& options = {});

struct PulseOptions {
  double initial_speed = 20.0;  // m/s
  double accel = 2.0;           // m/s^2
  int first_step = 21;          // leader acc = accel for first_step..last_step
  int last_step = 30;
};

/// Leader trace that cruises, then accelerates at a constant rate for the
/// pulse steps. Acceleration and input are set directly, not differentiated.
LeaderTrace PulseTrace(const PlatoonConfig& config, const PulseOptions& options = {});

struct StringStabilityResult {
  std::vector<double> peak_velocity_error;  // per follower
  std::vector<double> peak_gap_error;
  bool attenuating = false;  // peak |e_v| strictly decreasing upstream
  std::vector<EpisodeLog> logs;
};

/// Followers start at zero errors behind PulseTrace.
StringStabilityResult StringStabilityExperiment(std::span<const Policy> policies,
                                                const PlatoonConfig& config,
                                                const RewardWeights& weights,
                                                const PulseOptions& options = {},
                                                const ActionFilter& filter = {});

}  // namespace platoon
