#include "platoon/environment.h"

#include <stdexcept>

namespace platoon {

double Environment::TerminalValue(const FollowerObservation& obs) const {
  const ProblemContext& ctx = context();
  return TerminalReward(obs, ctx.platoon, ctx.vehicle, ctx.reward);
}

TraceEnvironment::TraceEnvironment(ProblemContext context,
                                   std::vector<std::vector<PredecessorSignal>> tracks,
                                   LocalState initial_state)
    : context_(std::move(context)), tracks_(std::move(tracks)), initial_state_(initial_state) {
  if (tracks_.empty()) throw std::invalid_argument("TraceEnvironment: no predecessor tracks");
  for (const auto& t : tracks_) {
    if (t.size() < static_cast<size_t>(context_.horizon())) {
      throw std::invalid_argument("TraceEnvironment: predecessor track shorter than the horizon");
    }
  }
}

FollowerObservation TraceEnvironment::Reset(int step, std::mt19937_64& rng) {
  if (step != 1) throw std::invalid_argument("TraceEnvironment: episodes start at step 1");
  std::uniform_int_distribution<size_t> pick(0, tracks_.size() - 1);
  track_ = pick(rng);
  step_ = 1;
  state_ = initial_state_;
  return {state_, tracks_[track_][0]};
}

StepResult TraceEnvironment::Step(double input, std::mt19937_64& /*rng*/) {
  const auto& track = tracks_[track_];
  const PredecessorSignal& pred = track[static_cast<size_t>(step_ - 1)];
  const FollowerObservation obs{state_, pred};
  const double u = ClampAction(input, context_.platoon);
  StepResult out;
  out.reward = StepReward(obs, u, context_.platoon, context_.vehicle, context_.reward);
  state_ = FollowerStep(state_, u, pred.accel, context_.platoon, context_.vehicle);
  ++step_;
  const size_t next = std::min(static_cast<size_t>(step_ - 1), track.size() - 1);
  out.next = {state_, track[next]};
  return out;
}

}  // namespace platoon
