#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "platoon/data.h"
#include "platoon/fh.h"
#include "platoon/rollout.h"
#include "platoon/run_config.h"

namespace platoon {

enum class Algorithm { kDdpg, kFhDdpg, kFhDdpgNb, kFhDdpgSa, kFhDdpgSs };

std::string AlgorithmName(Algorithm algorithm);
/// Throws std::invalid_argument listing the valid names.
Algorithm ParseAlgorithm(const std::string& name);

struct TraceSplit {
  std::vector<LeaderTrace> train;
  std::vector<LeaderTrace> test;
};

/// Trace file from the config, or synthetic traces when none is set, split by
/// the configured ratio and seed.
TraceSplit LoadTraceSplit(const RunConfig& config);

/// Periodic evaluation during the earliest training stage: mean return of the
/// follower on the curve traces, upstream followers fully trained.
struct CurvePoint {
  int episode = 0;
  int follower = 0;
  double eval_return = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct TrainOptions {
  int followers = 0;  // 0 trains every follower
  std::function<void(const std::string&)> log;
};

struct TrainResult {
  Algorithm algorithm = Algorithm::kFhDdpg;
  std::vector<PolicySet> policies;  // followers 1..n
  std::vector<CurvePoint> curve;
  std::vector<TrainingAudit> audits;
};

/// Trains followers one after another from the front of the platoon. Plain
/// DDPG learns from rollouts of the already trained followers on the training
/// traces; the finite-horizon variants sweep their state boxes. Deterministic
/// in (algorithm, config, traces, seed).
TrainResult TrainPlatoon(Algorithm algorithm, const RunConfig& config,
                         const std::vector<LeaderTrace>& train_traces,
                         const std::vector<LeaderTrace>& curve_traces, uint64_t seed,
                         const TrainOptions& options = {});

/// Deterministic policies; the sets must outlive the returned functions.
std::vector<Policy> MakePolicies(const std::vector<PolicySet>& sets);

/// Predecessor (acc, u) per step for follower `vehicle`, obtained by rolling
/// out `upstream` (followers 1..vehicle-1) behind each trace.
std::vector<std::vector<PredecessorSignal>> PredecessorTracks(const std::vector<PolicySet>& upstream,
                                                              const std::vector<LeaderTrace>& traces,
                                                              const RunConfig& config);

void WriteCurveCsv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> ReadCurveCsv(const std::filesystem::path& path);

/// Reduced sweep boxes of an SS run as `follower,step,dim,min,max` rows.
void WriteBoxCsv(const std::filesystem::path& path, const std::vector<TrainingAudit>& audits);

/// `follower_<i>/` policy sets, `curve.csv`, `config.ini`, `run.json` and, for
/// SS runs, `boxes.csv`.
void SaveTrainResult(const std::filesystem::path& dir, const TrainResult& result,
                     const RunConfig& config, uint64_t seed);
/// Loads the policy sets of a saved run. Throws std::runtime_error when the
/// directory is missing or incomplete.
std::vector<PolicySet> LoadRunPolicies(const std::filesystem::path& dir, const RunConfig& config);

}  // namespace platoon
