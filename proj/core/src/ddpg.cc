#include "platoon/ddpg.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "platoon/rl.h"

namespace platoon {
namespace {

struct FixedTargetEntry {
  Transition transition;
  double terminal_value = 0.0;  // R_K(S', myopic(S')) when step = K-1
};

Eigen::VectorXd ObservationVector(const FollowerObservation& obs) {
  const auto a = obs.AsArray();
  return Eigen::Map<const Eigen::VectorXd>(a.data(), kObservationDim);
}

double ExploratoryAction(const ActorCritic& nets, const FollowerObservation& obs, OuNoise& noise,
                         std::mt19937_64& rng, const PlatoonConfig& config) {
  return ClampAction(nets.Act(obs) + noise.Step(rng), config);
}

}  // namespace

void DdpgConfig::Validate() const {
  if (!(actor_lr >= 0.0 && critic_lr >= 0.0)) throw std::invalid_argument("DdpgConfig: learning rates must be >= 0");
  if (batch_size <= 0 || episodes <= 0 || buffer_capacity == 0) {
    throw std::invalid_argument("DdpgConfig: batch size, episodes and buffer capacity must be positive");
  }
  if (!(soft_update >= 0.0 && soft_update <= 1.0)) throw std::invalid_argument("DdpgConfig: soft_update must be in [0, 1]");
  if (eval_every <= 0 || eval_episodes <= 0) throw std::invalid_argument("DdpgConfig: evaluation settings must be positive");
  if (!(noise_theta > 0.0 && noise_theta <= 1.0) || !(noise_sigma >= 0.0)) {
    throw std::invalid_argument("DdpgConfig: invalid noise parameters");
  }
}

double ActorCritic::Act(const FollowerObservation& obs) const {
  return ActorForward(actor, ObservationVector(obs));
}

ActorCritic InitializeActorCritic(const MlpSpec& actor_spec, const MlpSpec& critic_spec,
                                  std::mt19937_64& rng) {
  Mlp actor = Mlp::Initialize(actor_spec, rng);
  Mlp critic = Mlp::Initialize(critic_spec, rng);
  return {std::move(actor), std::move(critic)};
}

Eigen::MatrixXd ObservationMatrix(const std::vector<FollowerObservation>& obs) {
  Eigen::MatrixXd m(kObservationDim, static_cast<Eigen::Index>(obs.size()));
  for (size_t n = 0; n < obs.size(); ++n) {
    const auto a = obs[n].AsArray();
    for (int d = 0; d < kObservationDim; ++d) m(d, static_cast<Eigen::Index>(n)) = a[static_cast<size_t>(d)];
  }
  return m;
}

double UpdateActorCritic(ActorCritic& nets, OptimizerState& actor_opt, OptimizerState& critic_opt,
                         const Eigen::MatrixXd& states, const Eigen::RowVectorXd& actions,
                         const Eigen::RowVectorXd& targets) {
  const double n = static_cast<double>(states.cols());

  ForwardCache critic_cache;
  const Eigen::MatrixXd q = nets.critic.Forward(states, &actions, &critic_cache);
  const Eigen::RowVectorXd residual = q.row(0) - targets;
  const double loss = residual.squaredNorm() / n;
  if (!std::isfinite(loss)) throw std::runtime_error("critic loss diverged");
  const MlpGradients critic_grads = nets.critic.Backward(critic_cache, (2.0 / n) * residual);
  OptimizerStep(nets.critic.mutable_weights(), critic_grads.params, critic_opt);

  ForwardCache actor_cache;
  const Eigen::MatrixXd policy_actions = nets.actor.Forward(states, nullptr, &actor_cache);
  const Eigen::RowVectorXd policy_row = policy_actions.row(0);
  ForwardCache q_cache;
  nets.critic.Forward(states, &policy_row, &q_cache);
  // Ascend mean Q: descend -mean Q.
  const MlpGradients dq = nets.critic.Backward(q_cache, Eigen::RowVectorXd::Constant(states.cols(), -1.0 / n));
  const MlpGradients actor_grads = nets.actor.Backward(actor_cache, dq.action);
  OptimizerStep(nets.actor.mutable_weights(), actor_grads.params, actor_opt);
  return loss;
}

Eigen::RowVectorXd BootstrapValues(const ActorCritic& nets, const Eigen::MatrixXd& next_states) {
  const Eigen::RowVectorXd a = nets.actor.Forward(next_states).row(0);
  return nets.critic.Forward(next_states, &a).row(0);
}

ActorCritic DdpgFixedTarget(ActorCritic init, const ActorCritic* targets, int step,
                            Environment& env, const DdpgConfig& config, std::mt19937_64& rng,
                            const TrainingCallback& callback, DdpgFtReport* report) {
  config.Validate();
  const ProblemContext& ctx = env.context();
  const int horizon = ctx.horizon();
  if (step < 1 || step > horizon - 1) {
    throw std::invalid_argument("DdpgFixedTarget: step " + std::to_string(step) + " outside [1, K-1]");
  }
  const bool terminal_target = step == horizon - 1;
  if (!terminal_target && targets == nullptr) {
    throw std::invalid_argument("DdpgFixedTarget: target networks required below K-1");
  }
  const double gamma = ctx.reward.discount;
  DdpgFtReport local_report;
  if (targets != nullptr) {
    local_report.target_actor_hash_before = WeightHash(targets->actor.weights());
    local_report.target_critic_hash_before = WeightHash(targets->critic.weights());
  }

  ActorCritic nets = std::move(init);
  OptimizerState actor_opt = OptimizerState::For(nets.actor.weights(), config.actor_lr);
  OptimizerState critic_opt = OptimizerState::For(nets.critic.weights(), config.critic_lr);
  ReplayBuffer<FixedTargetEntry> buffer(config.buffer_capacity);
  OuNoise noise(config.noise_theta, config.noise_sigma);

  const auto batch = static_cast<size_t>(config.batch_size);
  std::vector<FollowerObservation> states(batch), next_states(batch);
  Eigen::RowVectorXd actions(static_cast<Eigen::Index>(batch));
  Eigen::RowVectorXd y(static_cast<Eigen::Index>(batch));

  if (callback) callback(0, nets);
  for (int episode = 1; episode <= config.episodes; ++episode) {
    noise.Reset();
    const FollowerObservation s = env.Reset(step, rng);
    const double u = ExploratoryAction(nets, s, noise, rng, ctx.platoon);
    const StepResult result = env.Step(u, rng);
    FixedTargetEntry entry{{s, u, result.reward, result.next, step, false}, 0.0};
    if (terminal_target) {
      entry.terminal_value = env.TerminalValue(result.next);
    }
    buffer.Store(std::move(entry));

    const auto sample = buffer.Sample(batch, rng);
    for (size_t n = 0; n < batch; ++n) {
      const Transition& t = sample[n]->transition;
      states[n] = t.state;
      next_states[n] = t.next_state;
      actions(static_cast<Eigen::Index>(n)) = t.action;
      y(static_cast<Eigen::Index>(n)) = t.reward;
    }
    if (terminal_target) {
      local_report.used_myopic_terminal = true;
      for (size_t n = 0; n < batch; ++n) y(static_cast<Eigen::Index>(n)) += gamma * sample[n]->terminal_value;
    } else {
      y += gamma * BootstrapValues(*targets, ObservationMatrix(next_states));
    }
    local_report.last_critic_loss =
        UpdateActorCritic(nets, actor_opt, critic_opt, ObservationMatrix(states), actions, y);
    if (callback && episode % config.eval_every == 0) callback(episode, nets);
  }

  if (targets != nullptr) {
    local_report.target_actor_hash_after = WeightHash(targets->actor.weights());
    local_report.target_critic_hash_after = WeightHash(targets->critic.weights());
  }
  if (report != nullptr) *report = local_report;
  return nets;
}

ActorCritic Ddpg(ActorCritic init, ActorCritic init_targets, const DdpgHorizon& horizon,
                 Environment& env, const DdpgConfig& config, std::mt19937_64& rng,
                 const TrainingCallback& callback, DdpgReport* report) {
  config.Validate();
  if (horizon.first_step < 1 || horizon.last_step < horizon.first_step) {
    throw std::invalid_argument("Ddpg: invalid horizon");
  }
  const ProblemContext& ctx = env.context();
  const double gamma = ctx.reward.discount;

  ActorCritic nets = std::move(init);
  ActorCritic targets = std::move(init_targets);
  DdpgReport local_report;
  local_report.initial_target_actor_hash = WeightHash(targets.actor.weights());
  local_report.initial_target_critic_hash = WeightHash(targets.critic.weights());

  OptimizerState actor_opt = OptimizerState::For(nets.actor.weights(), config.actor_lr);
  OptimizerState critic_opt = OptimizerState::For(nets.critic.weights(), config.critic_lr);
  ReplayBuffer<Transition> buffer(config.buffer_capacity);
  OuNoise noise(config.noise_theta, config.noise_sigma);

  const auto batch = static_cast<size_t>(config.batch_size);
  std::vector<FollowerObservation> states(batch), next_states(batch);
  Eigen::RowVectorXd actions(static_cast<Eigen::Index>(batch));
  Eigen::RowVectorXd y(static_cast<Eigen::Index>(batch));

  if (callback) callback(0, nets);
  for (int episode = 1; episode <= config.episodes; ++episode) {
    noise.Reset();
    FollowerObservation s = env.Reset(horizon.first_step, rng);
    for (int k = horizon.first_step; k <= horizon.last_step; ++k) {
      const double u = ExploratoryAction(nets, s, noise, rng, ctx.platoon);
      const StepResult result = env.Step(u, rng);
      const bool terminal = k == horizon.last_step && horizon.bootstrap == nullptr;
      buffer.Store({s, u, result.reward, result.next, k, terminal});
      s = result.next;

      const auto sample = buffer.Sample(batch, rng);
      for (size_t n = 0; n < batch; ++n) {
        states[n] = sample[n]->state;
        next_states[n] = sample[n]->next_state;
        actions(static_cast<Eigen::Index>(n)) = sample[n]->action;
      }
      const Eigen::MatrixXd next = ObservationMatrix(next_states);
      const Eigen::RowVectorXd soft_values = BootstrapValues(targets, next);
      Eigen::RowVectorXd frozen_values;
      if (horizon.bootstrap != nullptr) frozen_values = BootstrapValues(*horizon.bootstrap, next);
      for (size_t n = 0; n < batch; ++n) {
        const auto i = static_cast<Eigen::Index>(n);
        const Transition& t = *sample[n];
        double value = 0.0;
        if (t.terminal) {
          value = 0.0;
        } else if (horizon.bootstrap != nullptr && t.step == horizon.last_step) {
          value = frozen_values(i);
        } else {
          value = soft_values(i);
        }
        y(i) = t.reward + gamma * value;
      }
      local_report.last_critic_loss =
          UpdateActorCritic(nets, actor_opt, critic_opt, ObservationMatrix(states), actions, y);
      ++local_report.updates;
      SoftUpdate(targets.actor.mutable_weights(), nets.actor.weights(), config.soft_update);
      SoftUpdate(targets.critic.mutable_weights(), nets.critic.weights(), config.soft_update);
    }
    if (callback && episode % config.eval_every == 0) callback(episode, nets);
  }
  local_report.final_target_actor_hash = WeightHash(targets.actor.weights());
  local_report.final_target_critic_hash = WeightHash(targets.critic.weights());
  if (report != nullptr) *report = local_report;
  return nets;
}

}  // namespace platoon
