#include "platoon/env.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace platoon {

void PlatoonConfig::ResizeVehicles(int n) {
  auto resize = [n](std::vector<double>& v) {
    const double fill = v.empty() ? 0.0 : v.front();
    v.resize(static_cast<size_t>(n), fill);
  };
  num_vehicles = n;
  resize(tau);
  resize(time_gap);
  resize(standstill);
  resize(body_length);
}

void PlatoonConfig::Validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("PlatoonConfig: " + what); };
  if (num_vehicles < 2) fail("num_vehicles must be >= 2");
  if (!(step_interval > 0.0)) fail("step_interval must be > 0");
  if (horizon < 2) fail("horizon must be >= 2");
  const auto n = static_cast<size_t>(num_vehicles);
  if (tau.size() != n || time_gap.size() != n || standstill.size() != n || body_length.size() != n) {
    fail("per-vehicle vectors must have num_vehicles entries");
  }
  for (size_t i = 0; i < n; ++i) {
    if (!(tau[i] > 0.0)) fail("tau must be > 0");
    if (!(time_gap[i] >= 0.0)) fail("time_gap must be >= 0");
  }
  if (!(accel_min < accel_max)) fail("accel_min must be < accel_max");
  if (!(input_min < input_max)) fail("input_min must be < input_max");
}

DynamicsMatrices BuildMatrices(const PlatoonConfig& config, int vehicle_index) {
  const double t = config.step_interval;
  const double tau = config.tau.at(static_cast<size_t>(vehicle_index));
  DynamicsMatrices m;
  m.a.setZero();
  m.b.setZero();
  m.c.setZero();
  m.a(2, 2) = 1.0 - t / tau;
  m.b(2) = t / tau;
  if (vehicle_index == 0) return m;
  const double h = config.time_gap.at(static_cast<size_t>(vehicle_index));
  m.a(0, 0) = 1.0;
  m.a(0, 1) = t;
  m.a(0, 2) = -h * t;
  m.a(1, 1) = 1.0;
  m.a(1, 2) = -t;
  m.c(1) = t;
  return m;
}

double ClampAction(double input, const PlatoonConfig& config) {
  return std::clamp(input, config.input_min, config.input_max);
}

double ClampAcceleration(double accel, const PlatoonConfig& config) {
  return std::clamp(accel, config.accel_min, config.accel_max);
}

double DrivelineStep(double accel, double input, double tau, const PlatoonConfig& config) {
  const double ratio = config.step_interval / tau;
  return ClampAcceleration((1.0 - ratio) * accel + ratio * input, config);
}

double LeaderStep(double accel, double input, const PlatoonConfig& config) {
  return DrivelineStep(accel, input, config.tau.at(0), config);
}

LocalState FollowerStep(const LocalState& x, double input, double pred_accel,
                        const PlatoonConfig& config, int vehicle_index) {
  if (!std::isfinite(x.gap_error) || !std::isfinite(x.velocity_error) || !std::isfinite(x.accel) ||
      !std::isfinite(input) || !std::isfinite(pred_accel)) {
    throw std::invalid_argument("FollowerStep: non-finite input");
  }
  const auto idx = static_cast<size_t>(vehicle_index);
  const double t = config.step_interval;
  const double h = config.time_gap.at(idx);
  LocalState next;
  next.gap_error = x.gap_error + t * x.velocity_error - h * t * x.accel;
  next.velocity_error = x.velocity_error - t * x.accel + t * pred_accel;
  next.accel = DrivelineStep(x.accel, input, config.tau.at(idx), config);
  return next;
}

double Jerk(double accel, double input, double tau) { return (input - accel) / tau; }

}  // namespace platoon
