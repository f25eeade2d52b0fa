#include "platoon/fh.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace platoon {
namespace {

constexpr int kPolicySetVersion = 1;

std::string StepFile(int step, const char* role) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "step_%03d_%s.json", step, role);
  return buf;
}

uint64_t Combine(uint64_t seed, uint64_t value) {
  return seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

// Trains steps K-1 down to `first_step` into `set`.
//   carry_over: start every step from its networks (phase-2 continuation);
//   otherwise use_nb picks trained(k+1) over the shared random init.
void TrainBackward(Environment& env, const FhConfig& config, int first_step, bool use_nb,
                   const ActorCritic& fresh, const PolicySet* carry_over, PolicySet& set,
                   std::mt19937_64& rng, const PolicyCallback& callback, TrainingAudit* audit,
                   int phase) {
  const int horizon = config.context.horizon();
  for (int k = horizon - 1; k >= first_step; --k) {
    StageAudit stage;
    stage.step = k;
    stage.phase = phase;
    ActorCritic init;
    if (carry_over != nullptr) {
      init = carry_over->At(k);
      stage.init_source = InitSource::kCarriedOver;
      stage.weight_reads.push_back(k);
    } else if (use_nb && k < horizon - 1) {
      init = set.At(k + 1);
      stage.init_source = InitSource::kTransferred;
      stage.weight_reads.push_back(k + 1);
    } else {
      init = fresh;
      stage.init_source = InitSource::kRandom;
      stage.weight_reads.push_back(-1);
    }
    stage.init_actor_hash = WeightHash(init.actor.weights());
    stage.init_critic_hash = WeightHash(init.critic.weights());

    const ActorCritic* targets = nullptr;
    if (k < horizon - 1) {
      targets = &set.At(k + 1);
      stage.weight_reads.push_back(k + 1);
    } else {
      stage.weight_reads.push_back(-1);
    }

    TrainingCallback stage_callback;
    if (callback && k == 1) {
      // Step 1 is written in place; the trained networks replace it below.
      stage_callback = [&](int episodes, const ActorCritic& current) {
        set.SetStep(1, current);
        callback(episodes, set);
      };
    }
    DdpgFtReport report;
    ActorCritic trained =
        DdpgFixedTarget(std::move(init), targets, k, env, config.ddpg, rng, stage_callback, &report);
    stage.used_myopic_terminal = report.used_myopic_terminal;
    stage.target_actor_hash_before = report.target_actor_hash_before;
    stage.target_actor_hash_after = report.target_actor_hash_after;
    stage.target_critic_hash_before = report.target_critic_hash_before;
    stage.target_critic_hash_after = report.target_critic_hash_after;
    stage.trained_actor_hash = WeightHash(trained.actor.weights());
    stage.trained_critic_hash = WeightHash(trained.critic.weights());
    set.SetStep(k, std::move(trained));
    if (audit != nullptr) audit->stages.push_back(std::move(stage));
  }
}

PolicySet BackwardInduction(Environment& env, const FhConfig& config, bool use_nb,
                            std::mt19937_64& rng, const PolicyCallback& callback, TrainingAudit* audit) {
  config.context.platoon.Validate();
  PolicySet set(config.context, 0);
  const ActorCritic fresh = InitializeActorCritic(config.actor_spec, config.critic_spec, rng);
  TrainBackward(env, config, 1, use_nb, fresh, nullptr, set, rng, callback, audit, 1);
  return set;
}

}  // namespace

// ---------------------------------------------------------------------------
// StateBox

StateBox StateBox::Large(const PlatoonConfig& config, double gap_error_max, double velocity_error_max) {
  StateBox box;
  box.lower = {-gap_error_max, -velocity_error_max, config.accel_min, config.accel_min, config.input_min};
  box.upper = {gap_error_max, velocity_error_max, config.accel_max, config.accel_max, config.input_max};
  return box;
}

StateBox StateBox::Point(const FollowerObservation& obs) {
  StateBox box;
  box.lower = obs.AsArray();
  box.upper = box.lower;
  return box;
}

void StateBox::Validate() const {
  for (size_t d = 0; d < lower.size(); ++d) {
    if (!(lower[d] <= upper[d])) throw std::invalid_argument("StateBox: lower bound exceeds upper bound");
  }
}

bool StateBox::Contains(const FollowerObservation& obs) const {
  const auto v = obs.AsArray();
  for (size_t d = 0; d < v.size(); ++d) {
    if (v[d] < lower[d] || v[d] > upper[d]) return false;
  }
  return true;
}

bool StateBox::Contains(const StateBox& other) const {
  for (size_t d = 0; d < lower.size(); ++d) {
    if (other.lower[d] < lower[d] || other.upper[d] > upper[d]) return false;
  }
  return true;
}

StateBox StateBox::Intersect(const StateBox& other) const {
  StateBox out;
  for (size_t d = 0; d < lower.size(); ++d) {
    out.lower[d] = std::max(lower[d], other.lower[d]);
    out.upper[d] = std::min(upper[d], other.upper[d]);
  }
  return out;
}

void StateBox::Extend(const FollowerObservation& obs) {
  const auto v = obs.AsArray();
  for (size_t d = 0; d < v.size(); ++d) {
    lower[d] = std::min(lower[d], v[d]);
    upper[d] = std::max(upper[d], v[d]);
  }
}

FollowerObservation SampleState(const StateBox& box, std::mt19937_64& rng) {
  std::array<double, kObservationDim> v{};
  for (size_t d = 0; d < v.size(); ++d) {
    if (box.lower[d] == box.upper[d]) {
      v[d] = box.lower[d];
    } else {
      v[d] = std::uniform_real_distribution<double>(box.lower[d], box.upper[d])(rng);
    }
  }
  return FollowerObservation::FromArray(v);
}

// ---------------------------------------------------------------------------
// SweepEnvironment

SweepEnvironment::SweepEnvironment(ProblemContext context, StateBox box)
    : SweepEnvironment(context, std::vector<StateBox>(static_cast<size_t>(context.horizon()), box)) {}

SweepEnvironment::SweepEnvironment(ProblemContext context, std::vector<StateBox> boxes)
    : context_(std::move(context)), boxes_(std::move(boxes)) {
  if (boxes_.size() != static_cast<size_t>(context_.horizon())) {
    throw std::invalid_argument("SweepEnvironment: one box per time step required");
  }
  for (const auto& b : boxes_) b.Validate();
  if (context_.vehicle < 1 || context_.vehicle >= context_.platoon.num_vehicles) {
    throw std::invalid_argument("SweepEnvironment: vehicle index must name a follower");
  }
}

const StateBox& SweepEnvironment::box(int step) const {
  const int clamped = std::clamp(step, 1, context_.horizon());
  return boxes_[static_cast<size_t>(clamped - 1)];
}

FollowerObservation SweepEnvironment::Reset(int step, std::mt19937_64& rng) {
  if (step < 1 || step > context_.horizon()) throw std::invalid_argument("SweepEnvironment: step out of range");
  step_ = step;
  current_ = SampleState(box(step), rng);
  return current_;
}

StepResult SweepEnvironment::Step(double input, std::mt19937_64& rng) {
  const PlatoonConfig& cfg = context_.platoon;
  const double u = ClampAction(input, cfg);
  StepResult out;
  out.reward = StepReward(current_, u, cfg, context_.vehicle, context_.reward);
  const LocalState next_local = FollowerStep(current_.local, u, current_.pred.accel, cfg, context_.vehicle);
  const double pred_tau = cfg.tau.at(static_cast<size_t>(context_.vehicle - 1));
  PredecessorSignal next_pred;
  next_pred.accel = DrivelineStep(current_.pred.accel, current_.pred.input, pred_tau, cfg);
  const StateBox& next_box = box(step_ + 1);
  constexpr size_t kInput = 4;
  next_pred.input = next_box.lower[kInput] == next_box.upper[kInput]
                        ? next_box.lower[kInput]
                        : std::uniform_real_distribution<double>(next_box.lower[kInput],
                                                                 next_box.upper[kInput])(rng);
  ++step_;
  current_ = {next_local, next_pred};
  out.next = current_;
  return out;
}

// ---------------------------------------------------------------------------
// PolicySet

PolicySet::PolicySet(ProblemContext context, int threshold, bool myopic_terminal)
    : context_(std::move(context)), threshold_(threshold), myopic_terminal_(myopic_terminal) {
  if (threshold < 0 || threshold > context_.horizon()) throw std::invalid_argument("PolicySet: invalid threshold");
}

void PolicySet::SetStep(int step, ActorCritic nets) {
  if (step <= threshold_ || step >= horizon() + (myopic_terminal_ ? 0 : 1)) {
    throw std::invalid_argument("PolicySet: step " + std::to_string(step) + " is not a per-step stage");
  }
  steps_.insert_or_assign(step, std::move(nets));
}

void PolicySet::SetHead(ActorCritic nets) {
  if (threshold_ == 0) throw std::invalid_argument("PolicySet: no stationary stage when threshold is 0");
  head_ = std::move(nets);
}

const ActorCritic& PolicySet::head() const {
  if (!head_) throw std::out_of_range("PolicySet: stationary head not trained");
  return *head_;
}

const ActorCritic* PolicySet::Find(int step) const {
  if (step >= 1 && step <= threshold_) return head_ ? &*head_ : nullptr;
  auto it = steps_.find(step);
  return it == steps_.end() ? nullptr : &it->second;
}

const ActorCritic& PolicySet::At(int step) const {
  const ActorCritic* nets = Find(step);
  if (nets == nullptr) throw std::out_of_range("PolicySet: no networks for step " + std::to_string(step));
  return *nets;
}

double PolicySet::Act(int step, const FollowerObservation& obs) const {
  if (step == horizon() && myopic_terminal_) {
    return MyopicAction(obs, context_.platoon, context_.vehicle, context_.reward);
  }
  return At(step).Act(obs);
}

Policy PolicySet::AsPolicy() const {
  return [this](int step, const FollowerObservation& obs) { return Act(step, obs); };
}

void SavePolicySet(const std::filesystem::path& dir, const PolicySet& set, uint64_t seed) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["version"] = kPolicySetVersion;
  meta["horizon"] = set.horizon();
  meta["threshold"] = set.threshold();
  meta["myopic_terminal"] = set.myopic_terminal();
  meta["vehicle"] = set.context().vehicle;
  meta["seed"] = seed;
  std::vector<int> steps;
  for (const auto& [k, nets] : set.steps()) {
    steps.push_back(k);
    SaveMlp(dir / StepFile(k, "actor"), nets.actor, seed);
    SaveMlp(dir / StepFile(k, "critic"), nets.critic, seed);
  }
  meta["steps"] = steps;
  meta["has_head"] = set.has_head();
  if (set.has_head()) {
    SaveMlp(dir / "head_actor.json", set.head().actor, seed);
    SaveMlp(dir / "head_critic.json", set.head().critic, seed);
    meta["actor_spec"] = MlpToJson(set.head().actor)["spec"];
  } else if (!set.steps().empty()) {
    meta["actor_spec"] = MlpToJson(set.steps().begin()->second.actor)["spec"];
  }
  std::ofstream out(dir / "meta.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << '\n';
}

PolicySet LoadPolicySet(const std::filesystem::path& dir, const ProblemContext& context) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw std::runtime_error("no policy set at " + dir.string());
  const nlohmann::json meta = nlohmann::json::parse(in);
  if (meta.at("version").get<int>() != kPolicySetVersion) throw std::runtime_error("unsupported policy set version");
  ProblemContext ctx = context;
  ctx.vehicle = meta.at("vehicle").get<int>();
  if (meta.at("horizon").get<int>() != ctx.horizon()) {
    throw std::runtime_error("policy set horizon does not match the configuration");
  }
  PolicySet set(ctx, meta.at("threshold").get<int>(), meta.at("myopic_terminal").get<bool>());
  for (int k : meta.at("steps").get<std::vector<int>>()) {
    set.SetStep(k, {LoadMlp(dir / StepFile(k, "actor")), LoadMlp(dir / StepFile(k, "critic"))});
  }
  if (meta.at("has_head").get<bool>()) {
    set.SetHead({LoadMlp(dir / "head_actor.json"), LoadMlp(dir / "head_critic.json")});
  }
  return set;
}

uint64_t PolicySetHash(const PolicySet& set) {
  uint64_t h = 0;
  if (set.has_head()) {
    h = Combine(h, WeightHash(set.head().actor.weights()));
    h = Combine(h, WeightHash(set.head().critic.weights()));
  }
  for (const auto& [k, nets] : set.steps()) {
    h = Combine(h, static_cast<uint64_t>(k));
    h = Combine(h, WeightHash(nets.actor.weights()));
    h = Combine(h, WeightHash(nets.critic.weights()));
  }
  return h;
}

const StageAudit* TrainingAudit::Find(int step, int phase) const {
  for (const auto& s : stages) {
    if (s.step == step && s.phase == phase) return &s;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Algorithms

PolicySet FhDdpg(Environment& env, const FhConfig& config, std::mt19937_64& rng,
                 const PolicyCallback& callback, TrainingAudit* audit) {
  return BackwardInduction(env, config, false, rng, callback, audit);
}

PolicySet FhDdpgNb(Environment& env, const FhConfig& config, std::mt19937_64& rng,
                   const PolicyCallback& callback, TrainingAudit* audit) {
  return BackwardInduction(env, config, true, rng, callback, audit);
}

PolicySet FhDdpgSa(Environment& env, int threshold, const FhConfig& config, bool use_nb,
                   std::mt19937_64& rng, const PolicyCallback& callback, TrainingAudit* audit,
                   const PolicySet* carry_over, int phase) {
  const int horizon = config.context.horizon();
  if (threshold < 1 || threshold >= horizon - 1) {
    throw std::invalid_argument("FhDdpgSa: threshold must satisfy 1 <= m < K-1");
  }
  if (carry_over != nullptr && carry_over->threshold() != threshold) {
    throw std::invalid_argument("FhDdpgSa: carried-over policy has a different threshold");
  }
  PolicySet set(config.context, threshold);
  const ActorCritic fresh = InitializeActorCritic(config.actor_spec, config.critic_spec, rng);
  TrainBackward(env, config, threshold + 1, use_nb, fresh, carry_over, set, rng, {}, audit, phase);

  const ActorCritic& next = set.At(threshold + 1);
  StageAudit stage;
  stage.step = 0;
  stage.phase = phase;
  ActorCritic init;
  if (carry_over != nullptr) {
    init = carry_over->head();
    stage.init_source = InitSource::kCarriedOver;
    stage.weight_reads.push_back(0);
  } else if (use_nb) {
    init = next;
    stage.init_source = InitSource::kTransferred;
    stage.weight_reads.push_back(threshold + 1);
  } else {
    init = fresh;
    stage.init_source = InitSource::kRandom;
    stage.weight_reads.push_back(-1);
  }
  stage.weight_reads.push_back(threshold + 1);
  stage.init_actor_hash = WeightHash(init.actor.weights());
  stage.init_critic_hash = WeightHash(init.critic.weights());

  TrainingCallback head_callback;
  if (callback) {
    head_callback = [&](int episodes, const ActorCritic& current) {
      set.SetHead(current);
      callback(episodes, set);
    };
  }
  DdpgReport report;
  const DdpgHorizon span{1, threshold, &next};
  ActorCritic head = Ddpg(std::move(init), next, span, env, config.ddpg, rng, head_callback, &report);
  stage.target_actor_hash_before = report.initial_target_actor_hash;
  stage.target_critic_hash_before = report.initial_target_critic_hash;
  stage.target_actor_hash_after = report.final_target_actor_hash;
  stage.target_critic_hash_after = report.final_target_critic_hash;
  stage.trained_actor_hash = WeightHash(head.actor.weights());
  stage.trained_critic_hash = WeightHash(head.critic.weights());
  set.SetHead(std::move(head));
  if (audit != nullptr) audit->stages.push_back(std::move(stage));
  return set;
}

void SsConfig::Validate() const {
  if (test_episodes < 1) throw std::invalid_argument("SsConfig: at least one test episode required");
  if (phase1_episodes < 1 || phase2_episodes < 1) throw std::invalid_argument("SsConfig: phase episodes must be positive");
  if (phase1_buffer == 0 || phase2_buffer == 0) throw std::invalid_argument("SsConfig: buffers must be positive");
  if (!(gap_error_max > 0.0 && velocity_error_max > 0.0)) throw std::invalid_argument("SsConfig: error bounds must be positive");
  if (!(box_margin >= 0.0)) throw std::invalid_argument("SsConfig: margin must be >= 0");
}

std::vector<StateBox> ReducedBoxes(const std::vector<EpisodeLog>& logs, int horizon,
                                   const StateBox& limit, double margin) {
  if (logs.empty()) throw std::invalid_argument("ReducedBoxes: no test logs");
  std::vector<StateBox> boxes;
  boxes.reserve(static_cast<size_t>(horizon));
  for (int k = 1; k <= horizon; ++k) {
    std::optional<StateBox> box;
    for (const auto& log : logs) {
      if (log.steps.size() < static_cast<size_t>(k)) throw std::invalid_argument("ReducedBoxes: log shorter than horizon");
      const StepRecord& r = log.steps[static_cast<size_t>(k - 1)];
      std::array<double, kObservationDim> v = {r.gap_error, r.velocity_error, r.accel, r.pred_accel, r.pred_input};
      for (size_t d = 0; d < v.size(); ++d) v[d] = std::clamp(v[d], limit.lower[d], limit.upper[d]);
      const auto obs = FollowerObservation::FromArray(v);
      if (box) {
        box->Extend(obs);
      } else {
        box = StateBox::Point(obs);
      }
    }
    for (size_t d = 0; d < box->lower.size(); ++d) {
      box->lower[d] -= margin;
      box->upper[d] += margin;
    }
    boxes.push_back(box->Intersect(limit));
  }
  return boxes;
}

PolicySet FhDdpgSs(const FhConfig& config, int threshold, const SsConfig& ss,
                   const KickoffTester& tester, std::mt19937_64& rng,
                   const PolicyCallback& callback, TrainingAudit* audit) {
  ss.Validate();
  const StateBox large = StateBox::Large(config.context.platoon, ss.gap_error_max, ss.velocity_error_max);

  FhConfig phase1 = config;
  phase1.ddpg.episodes = ss.phase1_episodes;
  phase1.ddpg.buffer_capacity = ss.phase1_buffer;
  SweepEnvironment sweep_large(config.context, large);
  const PolicySet kickoff = FhDdpgSa(sweep_large, threshold, phase1, true, rng, callback, audit, nullptr, 1);

  const std::vector<EpisodeLog> logs = tester(kickoff, ss.test_episodes);
  if (logs.empty()) throw std::runtime_error("FhDdpgSs: kick-off test produced no logs");
  std::vector<StateBox> boxes = ReducedBoxes(logs, config.context.horizon(), large, ss.box_margin);

  FhConfig phase2 = config;
  phase2.ddpg.episodes = ss.phase2_episodes;
  phase2.ddpg.buffer_capacity = ss.phase2_buffer;
  SweepEnvironment sweep_reduced(config.context, boxes);
  PolicyCallback offset_callback;
  if (callback) {
    offset_callback = [&](int episodes, const PolicySet& current) {
      callback(ss.phase1_episodes + episodes, current);
    };
  }
  if (audit != nullptr) {
    audit->large_box = large;
    audit->reduced_boxes = boxes;
    audit->phase1_final_hash = PolicySetHash(kickoff);
    audit->phase2_initial_hash = PolicySetHash(kickoff);
  }
  return FhDdpgSa(sweep_reduced, threshold, phase2, false, rng, offset_callback, audit, &kickoff, 2);
}

}  // namespace platoon
