#include "platoon/trainer.h"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "platoon/ddpg.h"
#include "platoon/eval.h"

namespace platoon {
namespace {

constexpr std::pair<Algorithm, const char*> kNames[] = {
    {Algorithm::kDdpg, "ddpg"},
    {Algorithm::kFhDdpg, "fh-ddpg"},
    {Algorithm::kFhDdpgNb, "fh-ddpg-nb"},
    {Algorithm::kFhDdpgSa, "fh-ddpg-sa"},
    {Algorithm::kFhDdpgSs, "fh-ddpg-ss"},
};

std::mt19937_64 FollowerRng(uint64_t seed, int follower) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(follower)};
  return std::mt19937_64(seq);
}

// Upstream policies plus `last` for the follower being trained.
std::vector<Policy> ChainPolicies(const std::vector<PolicySet>& upstream, const PolicySet& last) {
  std::vector<Policy> out = MakePolicies(upstream);
  out.push_back(last.AsPolicy());
  return out;
}

std::vector<EpisodeLog> FollowerLogs(const std::vector<PolicySet>& upstream, const PolicySet& last,
                                     const std::vector<LeaderTrace>& traces, int episodes,
                                     const RunConfig& config) {
  if (traces.empty()) throw std::invalid_argument("no traces to roll out");
  const std::vector<Policy> policies = ChainPolicies(upstream, last);
  const std::vector<LocalState> init(policies.size(), kTestInitialState);
  std::vector<EpisodeLog> out;
  for (int e = 0; e < episodes; ++e) {
    const LeaderTrace& trace = traces[static_cast<size_t>(e) % traces.size()];
    out.push_back(PlatoonRollout(policies, trace, init, config.platoon, config.reward).back());
  }
  return out;
}

}  // namespace

std::string AlgorithmName(Algorithm algorithm) {
  for (const auto& [a, name] : kNames) {
    if (a == algorithm) return name;
  }
  throw std::invalid_argument("unknown algorithm");
}

Algorithm ParseAlgorithm(const std::string& name) {
  std::string valid;
  for (const auto& [a, n] : kNames) {
    if (name == n) return a;
    valid += valid.empty() ? n : std::string(", ") + n;
  }
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected one of: " + valid + ")");
}

TraceSplit LoadTraceSplit(const RunConfig& config) {
  std::vector<LeaderTrace> traces =
      config.data.traces.empty()
          ? GenerateSyntheticTraces(config.data.synthetic_episodes, config.platoon, config.data.synthetic_seed)
          : LoadTraces(config.data.traces, config.platoon);
  auto [train, test] = SplitTraces(traces, config.data.train_ratio, config.data.split_seed);
  return {std::move(train), std::move(test)};
}

std::vector<Policy> MakePolicies(const std::vector<PolicySet>& sets) {
  std::vector<Policy> out;
  out.reserve(sets.size());
  for (const auto& s : sets) out.push_back(s.AsPolicy());
  return out;
}

std::vector<std::vector<PredecessorSignal>> PredecessorTracks(const std::vector<PolicySet>& upstream,
                                                              const std::vector<LeaderTrace>& traces,
                                                              const RunConfig& config) {
  const auto horizon = static_cast<size_t>(config.platoon.horizon);
  std::vector<std::vector<PredecessorSignal>> tracks;
  tracks.reserve(traces.size());
  const std::vector<Policy> policies = MakePolicies(upstream);
  const std::vector<LocalState> init(policies.size(), kTestInitialState);
  for (const auto& trace : traces) {
    std::vector<PredecessorSignal> track(horizon);
    if (upstream.empty()) {
      if (trace.accel.size() < horizon || trace.input.size() < horizon) {
        throw std::invalid_argument("trace '" + trace.episode_id + "' is shorter than the horizon");
      }
      for (size_t k = 0; k < horizon; ++k) track[k] = {trace.accel[k], trace.input[k]};
    } else {
      const EpisodeLog log = PlatoonRollout(policies, trace, init, config.platoon, config.reward).back();
      for (size_t k = 0; k < horizon; ++k) track[k] = {log.steps[k].accel, log.steps[k].input};
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

TrainResult TrainPlatoon(Algorithm algorithm, const RunConfig& config,
                         const std::vector<LeaderTrace>& train_traces,
                         const std::vector<LeaderTrace>& curve_traces, uint64_t seed,
                         const TrainOptions& options) {
  config.Validate();
  const int max_followers = config.platoon.num_vehicles - 1;
  const int followers = options.followers == 0 ? max_followers : options.followers;
  if (followers < 1 || followers > max_followers) throw std::invalid_argument("TrainPlatoon: invalid follower count");
  if (curve_traces.empty()) throw std::invalid_argument("TrainPlatoon: no traces for periodic evaluation");

  const bool baseline = algorithm == Algorithm::kDdpg;
  const LearnerConfig& learner = baseline ? config.baseline : config.fh;
  const MlpSpec actor_spec =
      ActorSpec(kObservationDim, learner.hidden, config.platoon.input_min, config.platoon.input_max);
  const MlpSpec critic_spec = CriticSpec(kObservationDim, learner.hidden);
  const int curve_episodes = std::min<int>(learner.ddpg.eval_episodes, static_cast<int>(curve_traces.size()));

  TrainResult result;
  result.algorithm = algorithm;
  result.policies.reserve(static_cast<size_t>(followers));
  for (int vehicle = 1; vehicle <= followers; ++vehicle) {
    if (options.log) options.log("training follower " + std::to_string(vehicle) + " with " + AlgorithmName(algorithm));
    std::mt19937_64 rng = FollowerRng(seed, vehicle);
    const ProblemContext ctx{config.platoon, config.reward, vehicle};
    const std::vector<PolicySet>& upstream = result.policies;

    PolicyCallback on_progress = [&](int episodes, const PolicySet& current) {
      const std::vector<EpisodeLog> logs = FollowerLogs(upstream, current, curve_traces, curve_episodes, config);
      double sum = 0.0;
      for (const auto& log : logs) sum += EpisodeReturn(log.Rewards(), config.reward.discount);
      result.curve.push_back({episodes, vehicle, sum / static_cast<double>(logs.size())});
    };

    TrainingAudit audit;
    PolicySet trained;
    if (baseline) {
      TraceEnvironment env(ctx, PredecessorTracks(upstream, train_traces, config), kTestInitialState);
      PolicySet set(ctx, ctx.horizon(), false);
      const ActorCritic init = InitializeActorCritic(actor_spec, critic_spec, rng);
      TrainingCallback cb = [&](int episodes, const ActorCritic& current) {
        set.SetHead(current);
        on_progress(episodes, set);
      };
      set.SetHead(Ddpg(init, init, {1, ctx.horizon(), nullptr}, env, learner.ddpg, rng, cb));
      trained = std::move(set);
    } else {
      const FhConfig fh{ctx, actor_spec, critic_spec, learner.ddpg};
      const StateBox large = StateBox::Large(config.platoon, config.gap_error_max, config.velocity_error_max);
      SweepEnvironment sweep(ctx, large);
      switch (algorithm) {
        case Algorithm::kFhDdpg:
          trained = FhDdpg(sweep, fh, rng, on_progress, &audit);
          break;
        case Algorithm::kFhDdpgNb:
          trained = FhDdpgNb(sweep, fh, rng, on_progress, &audit);
          break;
        case Algorithm::kFhDdpgSa:
          trained = FhDdpgSa(sweep, config.threshold, fh, false, rng, on_progress, &audit);
          break;
        case Algorithm::kFhDdpgSs: {
          SsConfig ss = config.ss;
          ss.gap_error_max = config.gap_error_max;
          ss.velocity_error_max = config.velocity_error_max;
          KickoffTester tester = [&](const PolicySet& kickoff, int episodes) {
            return FollowerLogs(upstream, kickoff, train_traces, episodes, config);
          };
          trained = FhDdpgSs(fh, config.threshold, ss, tester, rng, on_progress, &audit);
          break;
        }
        case Algorithm::kDdpg:
          break;
      }
    }
    result.policies.push_back(std::move(trained));
    result.audits.push_back(std::move(audit));
  }
  return result;
}

void WriteCurveCsv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "episode,follower,eval_return\n";
  char buf[128];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", p.episode, p.follower, p.eval_return);
    out << buf;
  }
}

std::vector<CurvePoint> ReadCurveCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "episode,follower,eval_return") throw std::runtime_error("unexpected curve header in " + path.string());
  std::vector<CurvePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CurvePoint p;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf%c", &p.episode, &p.follower, &p.eval_return, &tail) != 3) {
      throw std::runtime_error("malformed curve row: " + line);
    }
    out.push_back(p);
  }
  return out;
}

void WriteBoxCsv(const std::filesystem::path& path, const std::vector<TrainingAudit>& audits) {
  static constexpr const char* kDims[kObservationDim] = {"e_p", "e_v", "acc", "acc_pred", "u_pred"};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "follower,step,dim,min,max\n";
  char buf[160];
  for (size_t i = 0; i < audits.size(); ++i) {
    const auto& boxes = audits[i].reduced_boxes;
    for (size_t k = 0; k < boxes.size(); ++k) {
      for (size_t d = 0; d < kObservationDim; ++d) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%s,%.17g,%.17g\n", i + 1, k + 1, kDims[d], boxes[k].lower[d],
                      boxes[k].upper[d]);
        out << buf;
      }
    }
  }
}

void SaveTrainResult(const std::filesystem::path& dir, const TrainResult& result,
                     const RunConfig& config, uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (size_t i = 0; i < result.policies.size(); ++i) {
    SavePolicySet(dir / ("follower_" + std::to_string(i + 1)), result.policies[i], seed);
  }
  WriteCurveCsv(dir / "curve.csv", result.curve);
  if (result.algorithm == Algorithm::kFhDdpgSs) WriteBoxCsv(dir / "boxes.csv", result.audits);
  SaveRunConfig(dir / "config.ini", config);
  nlohmann::json meta = {{"algorithm", AlgorithmName(result.algorithm)},
                         {"followers", result.policies.size()},
                         {"seed", seed}};
  std::ofstream out(dir / "run.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "run.json").string());
  out << meta.dump(2) << '\n';
}

std::vector<PolicySet> LoadRunPolicies(const std::filesystem::path& dir, const RunConfig& config) {
  std::ifstream in(dir / "run.json");
  if (!in) throw std::runtime_error("no trained run at " + dir.string());
  const nlohmann::json meta = nlohmann::json::parse(in);
  const int followers = meta.at("followers").get<int>();
  std::vector<PolicySet> sets;
  sets.reserve(static_cast<size_t>(followers));
  for (int i = 1; i <= followers; ++i) {
    const ProblemContext ctx{config.platoon, config.reward, i};
    sets.push_back(LoadPolicySet(dir / ("follower_" + std::to_string(i)), ctx));
  }
  return sets;
}

}  // namespace platoon
