#include "platoon/rl.h"

namespace platoon {

OuNoise::OuNoise(double theta, double sigma) : theta_(theta), sigma_(sigma) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("OuNoise: theta must be in (0, 1]");
  if (!(sigma >= 0.0)) throw std::invalid_argument("OuNoise: sigma must be >= 0");
}

double OuNoise::Step(std::mt19937_64& rng) { return Step(normal_(rng)); }

double OuNoise::Step(double standard_normal) {
  state_ += theta_ * (0.0 - state_) + sigma_ * standard_normal;
  return state_;
}

}  // namespace platoon
