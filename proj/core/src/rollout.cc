#include "platoon/rollout.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace platoon {

std::vector<double> EpisodeLog::Rewards() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.reward);
  return out;
}

std::vector<double> LeaderVelocities(const LeaderTrace& leader, const PlatoonConfig& config) {
  const auto k_max = static_cast<size_t>(config.horizon);
  if (leader.velocity.empty() || leader.accel.size() < k_max) {
    throw std::invalid_argument("leader trace '" + leader.episode_id + "' is shorter than the horizon");
  }
  std::vector<double> v(k_max + 1);
  v[0] = leader.velocity[0];
  for (size_t k = 0; k < k_max; ++k) v[k + 1] = v[k] + config.step_interval * leader.accel[k];
  return v;
}

std::vector<EpisodeLog> PlatoonRollout(std::span<const Policy> policies, const LeaderTrace& leader,
                                       std::span<const LocalState> initial_states,
                                       const PlatoonConfig& config, const RewardWeights& weights,
                                       const ActionFilter& filter) {
  const auto k_max = static_cast<size_t>(config.horizon);
  if (leader.input.size() < k_max || leader.accel.size() < k_max) {
    throw std::invalid_argument("leader trace '" + leader.episode_id + "' is shorter than the horizon");
  }
  if (policies.size() != initial_states.size()) {
    throw std::invalid_argument("PlatoonRollout: one initial state per policy required");
  }
  if (policies.size() + 1 > static_cast<size_t>(config.num_vehicles)) {
    throw std::invalid_argument("PlatoonRollout: more policies than followers");
  }
  const std::vector<double> leader_v = LeaderVelocities(leader, config);
  const size_t n = policies.size();
  std::vector<EpisodeLog> logs(n);
  std::vector<LocalState> state(initial_states.begin(), initial_states.end());
  for (auto& log : logs) log.steps.resize(k_max);

  for (size_t k = 0; k < k_max; ++k) {
    PredecessorSignal pred{leader.accel[k], leader.input[k]};
    double pred_velocity = leader_v[k];
    for (size_t i = 0; i < n; ++i) {
      const int vehicle = static_cast<int>(i) + 1;
      const auto vi = static_cast<size_t>(vehicle);
      const FollowerObservation obs{state[i], pred};
      const int step = static_cast<int>(k) + 1;
      double u = policies[i](step, obs);
      if (filter) u = filter(step, u, obs, vehicle);
      u = ClampAction(u, config);
      StepRecord& rec = logs[i].steps[k];
      rec.gap_error = state[i].gap_error;
      rec.velocity_error = state[i].velocity_error;
      rec.accel = state[i].accel;
      rec.input = u;
      rec.jerk = Jerk(state[i].accel, u, config.tau[vi]);
      rec.reward = StepReward(obs, u, config, vehicle, weights);
      rec.velocity = pred_velocity - state[i].velocity_error;
      rec.headway = state[i].gap_error + config.standstill[vi] + config.time_gap[vi] * rec.velocity;
      rec.pred_accel = pred.accel;
      rec.pred_input = pred.input;

      state[i] = FollowerStep(state[i], u, pred.accel, config, vehicle);
      pred = {rec.accel, u};
      pred_velocity = rec.velocity;
    }
  }
  return logs;
}

void WriteEpisodeCsv(const std::filesystem::path& path, const std::vector<EpisodeLog>& logs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "follower,step,e_p,e_v,acc,u,jerk,reward\n";
  char buf[512];
  for (size_t i = 0; i < logs.size(); ++i) {
    for (size_t k = 0; k < logs[i].steps.size(); ++k) {
      const auto& s = logs[i].steps[k];
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i + 1, k + 1,
                    s.gap_error, s.velocity_error, s.accel, s.input, s.jerk, s.reward);
      out << buf;
    }
  }
}

std::vector<EpisodeLog> ReadEpisodeCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<EpisodeLog> logs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> v;
    while (std::getline(ss, field, ',')) v.push_back(std::stod(field));
    if (v.size() != 8) throw std::runtime_error("malformed episode row: " + line);
    const auto follower = static_cast<size_t>(v[0]);
    const auto step = static_cast<size_t>(v[1]);
    if (follower == 0 || step == 0) throw std::runtime_error("malformed episode row: " + line);
    if (logs.size() < follower) logs.resize(follower);
    auto& steps = logs[follower - 1].steps;
    if (steps.size() < step) steps.resize(step);
    StepRecord& s = steps[step - 1];
    s.gap_error = v[2];
    s.velocity_error = v[3];
    s.accel = v[4];
    s.input = v[5];
    s.jerk = v[6];
    s.reward = v[7];
  }
  return logs;
}

}  // namespace platoon
