#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "platoon/environment.h"
#include "platoon/nn.h"

namespace platoon {

struct DdpgConfig {
  double actor_lr = 1e-4;   // alpha
  double critic_lr = 1e-3;  // beta
  int batch_size = 64;      // N_b
  int episodes = 5000;      // E
  double soft_update = 1e-3;  // eta
  size_t buffer_capacity = 2500;
  int eval_every = 100;
  int eval_episodes = 10;
  double noise_theta = 0.15;
  double noise_sigma = 0.5;

  void Validate() const;
  bool operator==(const DdpgConfig&) const = default;
};

struct ActorCritic {
  Mlp actor;
  Mlp critic;

  double Act(const FollowerObservation& obs) const;
  bool operator==(const ActorCritic&) const = default;
};

/// Fresh actor and critic drawn from `rng` (actor first).
ActorCritic InitializeActorCritic(const MlpSpec& actor_spec, const MlpSpec& critic_spec,
                                  std::mt19937_64& rng);

/// Called before training (episodes_done = 0) and after every eval_every
/// episodes with the networks as they stand.
using TrainingCallback = std::function<void(int episodes_done, const ActorCritic& current)>;

/// Packs observations column-wise into a kObservationDim x n matrix.
Eigen::MatrixXd ObservationMatrix(const std::vector<FollowerObservation>& obs);

/// One critic regression step towards `targets` followed by one deterministic
/// policy-gradient step for the actor through the updated critic. Returns the
/// critic's mean squared error before the step; throws std::runtime_error if
/// it is not finite.
double UpdateActorCritic(ActorCritic& nets, OptimizerState& actor_opt, OptimizerState& critic_opt,
                         const Eigen::MatrixXd& states, const Eigen::RowVectorXd& actions,
                         const Eigen::RowVectorXd& targets);

/// Q'(S', mu'(S')) for a batch of next states.
Eigen::RowVectorXd BootstrapValues(const ActorCritic& nets, const Eigen::MatrixXd& next_states);

struct DdpgFtReport {
  bool used_myopic_terminal = false;
  uint64_t target_actor_hash_before = 0;
  uint64_t target_actor_hash_after = 0;
  uint64_t target_critic_hash_before = 0;
  uint64_t target_critic_hash_after = 0;
  double last_critic_loss = 0.0;
};

/// DDPG with fixed targets on the one-period problem at time step `step`.
/// Each episode draws S_k from `env`, acts with exploration, stores the
/// transition and performs one minibatch update. Targets are
/// r + gamma * Q'(S', mu'(S')), or r + gamma * R_K(S', myopic(S')) when
/// step = K-1, in which case `targets` may be null.
ActorCritic DdpgFixedTarget(ActorCritic init, const ActorCritic* targets, int step,
                            Environment& env, const DdpgConfig& config, std::mt19937_64& rng,
                            const TrainingCallback& callback = {}, DdpgFtReport* report = nullptr);

/// Time steps covered by a multi-step DDPG episode. When `bootstrap` is set,
/// transitions taken at `last_step` bootstrap from its (frozen) networks;
/// otherwise they are terminal.
struct DdpgHorizon {
  int first_step = 1;
  int last_step = 1;
  const ActorCritic* bootstrap = nullptr;
};

struct DdpgReport {
  uint64_t initial_target_actor_hash = 0;
  uint64_t initial_target_critic_hash = 0;
  uint64_t final_target_actor_hash = 0;
  uint64_t final_target_critic_hash = 0;
  long updates = 0;
  double last_critic_loss = 0.0;
};

/// Standard DDPG over the steps in `horizon` with soft-updated target networks
/// starting from `init_targets`.
ActorCritic Ddpg(ActorCritic init, ActorCritic init_targets, const DdpgHorizon& horizon,
                 Environment& env, const DdpgConfig& config, std::mt19937_64& rng,
                 const TrainingCallback& callback = {}, DdpgReport* report = nullptr);

}  // namespace platoon
