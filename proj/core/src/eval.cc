#include "platoon/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace platoon {

EvalResult Evaluate(std::span<const Policy> policies, const std::vector<LeaderTrace>& traces,
                    int episodes, const PlatoonConfig& config, const RewardWeights& weights,
                    const ActionFilter& filter, int workers) {
  if (policies.empty()) throw std::invalid_argument("Evaluate: no policies");
  for (size_t i = 0; i < policies.size(); ++i) {
    if (!policies[i]) throw std::invalid_argument("Evaluate: missing policy for follower " + std::to_string(i + 1));
  }
  if (episodes < 1 || static_cast<size_t>(episodes) > traces.size()) {
    throw std::invalid_argument("Evaluate: requested " + std::to_string(episodes) + " episodes but " +
                                std::to_string(traces.size()) + " traces are available");
  }
  const std::vector<LocalState> init(policies.size(), kTestInitialState);
  EvalResult result;
  result.logs.resize(static_cast<size_t>(episodes));
  auto run = [&](size_t e) {
    result.logs[e] = PlatoonRollout(policies, traces[e], init, config, weights, filter);
  };
  const int threads = std::clamp(workers, 1, episodes);
  if (threads == 1) {
    for (size_t e = 0; e < result.logs.size(); ++e) run(e);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (size_t e = static_cast<size_t>(t); e < result.logs.size(); e += static_cast<size_t>(threads)) run(e);
        } catch (...) {
          errors[static_cast<size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
  for (int e = 0; e < episodes; ++e) result.episode_ids.push_back(traces[static_cast<size_t>(e)].episode_id);
  result.report = AggregateReport(result.logs, weights.discount);
  result.report.safety = AnalyzeSafety(result.logs);
  return result;
}

EvalReport AggregateReport(const EpisodeLogs& logs, double discount) {
  if (logs.empty()) throw std::invalid_argument("AggregateReport: no episodes");
  const size_t followers = logs.front().size();
  EvalReport report;
  report.episodes = static_cast<int>(logs.size());
  std::vector<std::vector<double>> returns(followers);
  double worst = std::numeric_limits<double>::infinity();
  for (size_t e = 0; e < logs.size(); ++e) {
    if (logs[e].size() != followers) throw std::invalid_argument("AggregateReport: follower count differs between episodes");
    double total = 0.0;
    for (size_t i = 0; i < followers; ++i) {
      const std::vector<double> rewards = logs[e][i].Rewards();
      const double g = EpisodeReturn(rewards, discount);
      returns[i].push_back(g);
      total += g;
    }
    if (total < worst) {
      worst = total;
      report.worst_episode = static_cast<int>(e) + 1;
    }
  }
  for (const auto& r : returns) {
    FollowerStats s;
    s.episodes = static_cast<int>(r.size());
    double sum = 0.0;
    for (double g : r) sum += g;
    s.mean = sum / static_cast<double>(r.size());
    s.max = *std::max_element(r.begin(), r.end());
    s.min = *std::min_element(r.begin(), r.end());
    double sq = 0.0;
    for (double g : r) sq += (g - s.mean) * (g - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(r.size()));
    // Guard the ordering invariant against rounding in the mean.
    s.mean = std::clamp(s.mean, s.min, s.max);
    report.sum_performance += s.mean;
    report.followers.push_back(s);
  }
  return report;
}

SafetyReport AnalyzeSafety(const EpisodeLogs& logs) {
  if (logs.empty()) throw std::invalid_argument("AnalyzeSafety: no episodes");
  SafetyReport out;
  out.min_headway = std::numeric_limits<double>::infinity();
  out.most_negative_gap_error = std::numeric_limits<double>::infinity();
  for (size_t e = 0; e < logs.size(); ++e) {
    for (size_t i = 0; i < logs[e].size(); ++i) {
      const auto& steps = logs[e][i].steps;
      for (size_t k = 0; k < steps.size(); ++k) {
        out.min_headway = std::min(out.min_headway, steps[k].headway);
        if (steps[k].headway <= 0.0) out.collision = true;
        if (steps[k].gap_error < out.most_negative_gap_error) {
          out.most_negative_gap_error = steps[k].gap_error;
          out.step = static_cast<int>(k) + 1;
          out.follower = static_cast<int>(i) + 1;
          out.episode = static_cast<int>(e) + 1;
        }
      }
    }
  }
  return out;
}

nlohmann::json ToJson(const EvalReport& report) {
  nlohmann::json followers = nlohmann::json::array();
  for (size_t i = 0; i < report.followers.size(); ++i) {
    const auto& s = report.followers[i];
    followers.push_back({{"follower", i + 1},
                         {"episodes", s.episodes},
                         {"mean", s.mean},
                         {"max", s.max},
                         {"min", s.min},
                         {"std", s.std}});
  }
  const auto& sf = report.safety;
  return {{"episodes", report.episodes},
          {"followers", followers},
          {"sum_performance", report.sum_performance},
          {"worst_episode", report.worst_episode},
          {"safety",
           {{"min_headway", sf.min_headway},
            {"most_negative_gap_error", sf.most_negative_gap_error},
            {"step", sf.step},
            {"follower", sf.follower},
            {"episode", sf.episode},
            {"collision", sf.collision}}}};
}

double JerkClip(double input, double accel, int step, double tau, const PlatoonConfig& config,
                const JerkClipOptions& options) {
  double u = input;
  if (step > options.threshold) {
    u = std::clamp(u, accel + tau * options.jerk_min, accel + tau * options.jerk_max);
  }
  return ClampAction(u, config);
}

ActionFilter MakeJerkClipFilter(const PlatoonConfig& config, const JerkClipOptions& options) {
  if (!(options.jerk_min <= options.jerk_max)) throw std::invalid_argument("JerkClipOptions: jerk_min > jerk_max");
  return [config, options](int step, double u, const FollowerObservation& obs, int vehicle) {
    return JerkClip(u, obs.local.accel, step, config.tau.at(static_cast<size_t>(vehicle)), config, options);
  };
}

LeaderTrace PulseTrace(const PlatoonConfig& config, const PulseOptions& options) {
  const auto n = static_cast<size_t>(config.horizon) + 2;
  LeaderTrace trace;
  trace.episode_id = "pulse";
  trace.accel.assign(n - 1, 0.0);
  for (int k = options.first_step; k <= options.last_step; ++k) {
    if (k >= 1 && static_cast<size_t>(k) <= trace.accel.size()) trace.accel[static_cast<size_t>(k - 1)] = options.accel;
  }
  trace.velocity.resize(n);
  trace.velocity[0] = options.initial_speed;
  for (size_t k = 0; k + 1 < n; ++k) trace.velocity[k + 1] = trace.velocity[k] + config.step_interval * trace.accel[k];
  // Driveline inversion: the input that produces the next acceleration.
  const double ratio = config.tau.front() / config.step_interval;
  trace.input.resize(n - 2);
  for (size_t k = 0; k + 2 < n; ++k) {
    trace.input[k] = ClampAction(ratio * (trace.accel[k + 1] - trace.accel[k]) + trace.accel[k], config);
  }
  return trace;
}

StringStabilityResult StringStabilityExperiment(std::span<const Policy> policies,
                                                const PlatoonConfig& config,
                                                const RewardWeights& weights,
                                                const PulseOptions& options,
                                                const ActionFilter& filter) {
  const LeaderTrace leader = PulseTrace(config, options);
  const std::vector<LocalState> init(policies.size(), LocalState{});
  StringStabilityResult out;
  out.logs = PlatoonRollout(policies, leader, init, config, weights, filter);
  for (const auto& log : out.logs) {
    double ev = 0.0, ep = 0.0;
    for (const auto& s : log.steps) {
      ev = std::max(ev, std::abs(s.velocity_error));
      ep = std::max(ep, std::abs(s.gap_error));
    }
    out.peak_velocity_error.push_back(ev);
    out.peak_gap_error.push_back(ep);
  }
  out.attenuating = true;
  for (size_t i = 1; i < out.peak_velocity_error.size(); ++i) {
    if (!(out.peak_velocity_error[i] < out.peak_velocity_error[i - 1])) out.attenuating = false;
  }
  return out;
}

}  // namespace platoon
