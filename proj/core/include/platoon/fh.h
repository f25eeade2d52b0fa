#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "platoon/ddpg.h"
#include "platoon/environment.h"
#include "platoon/rollout.h"

namespace platoon {

/// Axis-aligned region over (e_p, e_v, acc, acc_pred, u_pred).
struct StateBox {
  std::array<double, kObservationDim> lower{};
  std::array<double, kObservationDim> upper{};

  /// e_p in [-ep_max, ep_max], e_v in [-ev_max, ev_max], accelerations and
  /// predecessor input at their physical limits.
  static StateBox Large(const PlatoonConfig& config, double gap_error_max, double velocity_error_max);
  static StateBox Point(const FollowerObservation& obs);

  void Validate() const;
  bool Contains(const FollowerObservation& obs) const;
  bool Contains(const StateBox& other) const;
  StateBox Intersect(const StateBox& other) const;
  /// Grows to include `obs`.
  void Extend(const FollowerObservation& obs);

  bool operator==(const StateBox&) const = default;
};

/// Independent uniform draw per dimension.
FollowerObservation SampleState(const StateBox& box, std::mt19937_64& rng);

/// Exhaustive-sweep environment for one follower. S_k is drawn from the box
/// for step k; the next local state follows the vehicle dynamics, the next
/// predecessor acceleration follows the predecessor's driveline, and the next
/// predecessor input is drawn uniformly from the box for step k+1.
class SweepEnvironment final : public Environment {
 public:
  SweepEnvironment(ProblemContext context, StateBox box);
  /// `boxes[k-1]` is the box for step k, k = 1..K.
  SweepEnvironment(ProblemContext context, std::vector<StateBox> boxes);

  FollowerObservation Reset(int step, std::mt19937_64& rng) override;
  StepResult Step(double input, std::mt19937_64& rng) override;
  const ProblemContext& context() const override { return context_; }

  const StateBox& box(int step) const;

 private:
  ProblemContext context_;
  std::vector<StateBox> boxes_;
  int step_ = 1;
  FollowerObservation current_;
};

/// Per-step actors and critics for steps m+1..K-1, one stationary pair for
/// steps 1..m and, optionally, the myopic policy at step K.
class PolicySet {
 public:
  PolicySet() = default;
  PolicySet(ProblemContext context, int threshold, bool myopic_terminal = true);

  const ProblemContext& context() const { return context_; }
  int horizon() const { return context_.horizon(); }
  int threshold() const { return threshold_; }
  bool myopic_terminal() const { return myopic_terminal_; }

  void SetStep(int step, ActorCritic nets);
  void SetHead(ActorCritic nets);
  bool has_head() const { return head_.has_value(); }
  const ActorCritic& head() const;
  const std::map<int, ActorCritic>& steps() const { return steps_; }

  /// Networks acting at step k (the head for k <= m), or null.
  const ActorCritic* Find(int step) const;
  const ActorCritic& At(int step) const;

  /// Deterministic action at step k; the myopic action at K when enabled.
  /// Throws std::out_of_range when no policy covers the step.
  double Act(int step, const FollowerObservation& obs) const;

  Policy AsPolicy() const;

 private:
  ProblemContext context_;
  int threshold_ = 0;
  bool myopic_terminal_ = true;
  std::optional<ActorCritic> head_;
  std::map<int, ActorCritic> steps_;
};

void SavePolicySet(const std::filesystem::path& dir, const PolicySet& set, uint64_t seed = 0);
PolicySet LoadPolicySet(const std::filesystem::path& dir, const ProblemContext& context);

/// Where a stage's initial weights came from.
enum class InitSource { kRandom, kTransferred, kCarriedOver };

/// Instrumentation for one trained stage. `step` is 0 for the stationary head.
/// Weight reads list the time steps whose trained networks the stage used
/// (-1 for the random initialization or the myopic terminal).
struct StageAudit {
  int step = 0;
  int phase = 1;
  InitSource init_source = InitSource::kRandom;
  uint64_t init_actor_hash = 0;
  uint64_t init_critic_hash = 0;
  uint64_t target_actor_hash_before = 0;
  uint64_t target_actor_hash_after = 0;
  uint64_t target_critic_hash_before = 0;
  uint64_t target_critic_hash_after = 0;
  uint64_t trained_actor_hash = 0;
  uint64_t trained_critic_hash = 0;
  bool used_myopic_terminal = false;
  std::vector<int> weight_reads;
};

struct TrainingAudit {
  std::vector<StageAudit> stages;  // in training order
  std::vector<StateBox> reduced_boxes;  // SS only, index k-1
  StateBox large_box{};
  uint64_t phase1_final_hash = 0;  // SS: combined hash of the kick-off policy
  uint64_t phase2_initial_hash = 0;

  const StageAudit* Find(int step, int phase = 1) const;
};

/// Combined hash over every network in a policy set.
uint64_t PolicySetHash(const PolicySet& set);

struct FhConfig {
  ProblemContext context;
  MlpSpec actor_spec;
  MlpSpec critic_spec;
  DdpgConfig ddpg;
};

/// Receives the partially trained policy set during the earliest stage (step 1
/// or the stationary head). `episodes_done` counts within that stage.
using PolicyCallback = std::function<void(int episodes_done, const PolicySet& current)>;

/// Backward induction with fresh random networks at every step.
PolicySet FhDdpg(Environment& env, const FhConfig& config, std::mt19937_64& rng,
                 const PolicyCallback& callback = {}, TrainingAudit* audit = nullptr);

/// Backward induction with the trained step-(k+1) weights as step k's
/// initialization.
PolicySet FhDdpgNb(Environment& env, const FhConfig& config, std::mt19937_64& rng,
                   const PolicyCallback& callback = {}, TrainingAudit* audit = nullptr);

/// Per-step networks for K-1..m+1 (with or without weight transfer) and one
/// DDPG-trained stationary pair for steps 1..m whose targets start at the
/// step-(m+1) networks. When `carry_over` is given, every stage starts from its
/// networks instead of a random initialization.
PolicySet FhDdpgSa(Environment& env, int threshold, const FhConfig& config, bool use_nb,
                   std::mt19937_64& rng, const PolicyCallback& callback = {},
                   TrainingAudit* audit = nullptr, const PolicySet* carry_over = nullptr,
                   int phase = 1);

struct SsConfig {
  int test_episodes = 20;  // G
  int phase1_episodes = 3000;
  int phase2_episodes = 2000;
  size_t phase1_buffer = 2500;
  size_t phase2_buffer = 2000;
  double gap_error_max = 2.0;       // m
  double velocity_error_max = 1.5;  // m/s
  double box_margin = 0.0;          // padding added to each reduced box side

  void Validate() const;
  bool operator==(const SsConfig&) const = default;
};

/// Test rollouts of a kick-off policy: returns this follower's logs for
/// `episodes` test episodes.
using KickoffTester = std::function<std::vector<EpisodeLog>(const PolicySet& kickoff, int episodes)>;

/// Per-step boxes (index k-1) bounding the logged states, padded by `margin`
/// and intersected with `limit`.
std::vector<StateBox> ReducedBoxes(const std::vector<EpisodeLog>& logs, int horizon,
                                   const StateBox& limit, double margin);

/// Phase 1: FH-DDPG-SA-NB sweeping the large box. Then G test rollouts of the
/// kick-off policy give per-step reduced boxes. Phase 2: FH-DDPG-SA over the
/// reduced boxes, continuing from the phase-1 networks.
PolicySet FhDdpgSs(const FhConfig& config, int threshold, const SsConfig& ss,
                   const KickoffTester& tester, std::mt19937_64& rng,
                   const PolicyCallback& callback = {}, TrainingAudit* audit = nullptr);

}  // namespace platoon
