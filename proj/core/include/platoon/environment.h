#pragma once

#include <random>
#include <vector>

#include "platoon/env.h"
#include "platoon/reward.h"

namespace platoon {

/// Everything a single follower's learning problem depends on.
struct ProblemContext {
  PlatoonConfig platoon;
  RewardWeights reward;
  int vehicle = 1;

  int horizon() const { return platoon.horizon; }
};

struct StepResult {
  double reward = 0.0;
  FollowerObservation next;
};

/// Episodic interface the learners interact with. An episode begins at an
/// arbitrary time step (one-period problems start at k, multi-step ones at 1).
class Environment {
 public:
  virtual ~Environment() = default;

  /// Starts an episode at time step `step` and returns S_step.
  virtual FollowerObservation Reset(int step, std::mt19937_64& rng) = 0;

  /// Applies `input` at the current step, advances, and returns (r, S').
  virtual StepResult Step(double input, std::mt19937_64& rng) = 0;

  virtual const ProblemContext& context() const = 0;

  /// Value of reaching S_K: the immediate reward of the myopic action.
  virtual double TerminalValue(const FollowerObservation& obs) const;
};

/// Replays recorded predecessor signals: each episode picks one track
/// uniformly and starts the follower from a fixed initial state at step 1.
class TraceEnvironment final : public Environment {
 public:
  /// Each track holds the predecessor's (acc, u) for steps 1..K.
  TraceEnvironment(ProblemContext context, std::vector<std::vector<PredecessorSignal>> tracks,
                   LocalState initial_state);

  FollowerObservation Reset(int step, std::mt19937_64& rng) override;
  StepResult Step(double input, std::mt19937_64& rng) override;
  const ProblemContext& context() const override { return context_; }

 private:
  ProblemContext context_;
  std::vector<std::vector<PredecessorSignal>> tracks_;
  LocalState initial_state_;
  size_t track_ = 0;
  int step_ = 1;
  LocalState state_;
};

}  // namespace platoon
