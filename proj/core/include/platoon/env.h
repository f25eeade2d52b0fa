#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace platoon {

/// Platoon geometry, driveline and limit parameters. Per-vehicle vectors are
/// indexed by vehicle: 0 is the leader, 1..N-1 are followers.
struct PlatoonConfig {
  int num_vehicles = 5;
  double step_interval = 0.1;  // T, seconds
  int horizon = 100;           // K, steps per episode
  std::vector<double> tau = std::vector<double>(5, 0.1);
  std::vector<double> time_gap = std::vector<double>(5, 1.0);
  std::vector<double> standstill = std::vector<double>(5, 2.0);
  std::vector<double> body_length = std::vector<double>(5, 5.0);
  double accel_min = -2.6;
  double accel_max = 2.6;
  double input_min = -2.6;
  double input_max = 2.6;

  /// Resizes every per-vehicle vector to `n`, filling with the first entry.
  void ResizeVehicles(int n);

  /// Throws std::invalid_argument when an invariant is violated.
  void Validate() const;
  bool operator==(const PlatoonConfig&) const = default;
};

/// x_{i,k}: the error state a follower measures locally.
struct LocalState {
  double gap_error = 0.0;       // e_p, m
  double velocity_error = 0.0;  // e_v, m/s
  double accel = 0.0;           // m/s^2

  Eigen::Vector3d AsVector() const { return {gap_error, velocity_error, accel}; }
  static LocalState FromVector(const Eigen::Vector3d& x) { return {x(0), x(1), x(2)}; }
  bool operator==(const LocalState&) const = default;
};

/// Predecessor acceleration and control input received over V2X.
struct PredecessorSignal {
  double accel = 0.0;
  double input = 0.0;
  bool operator==(const PredecessorSignal&) const = default;
};

inline constexpr int kObservationDim = 5;

/// S_{i,k} = [e_p, e_v, acc, acc_pred, u_pred].
struct FollowerObservation {
  LocalState local;
  PredecessorSignal pred;

  std::array<double, kObservationDim> AsArray() const {
    return {local.gap_error, local.velocity_error, local.accel, pred.accel, pred.input};
  }
  static FollowerObservation FromArray(const std::array<double, kObservationDim>& v) {
    return {{v[0], v[1], v[2]}, {v[3], v[4]}};
  }
  bool operator==(const FollowerObservation&) const = default;
};

struct DynamicsMatrices {
  Eigen::Matrix3d a;
  Eigen::Vector3d b;
  Eigen::Vector3d c;
};

/// Forward-Euler discretization for vehicle `vehicle_index` (0 = leader).
DynamicsMatrices BuildMatrices(const PlatoonConfig& config, int vehicle_index);

double ClampAction(double input, const PlatoonConfig& config);
double ClampAcceleration(double accel, const PlatoonConfig& config);

/// First-order driveline update for the leader, clamped to the acceleration
/// limits.
double LeaderStep(double accel, double input, const PlatoonConfig& config);

/// Same driveline update as LeaderStep but for an arbitrary vehicle's time
/// constant. Used to propagate a predecessor's acceleration.
double DrivelineStep(double accel, double input, double tau, const PlatoonConfig& config);

/// x' = A x + B u + C acc_pred for follower `vehicle_index`, with the
/// acceleration clamped afterwards. Throws std::invalid_argument on non-finite
/// inputs.
LocalState FollowerStep(const LocalState& x, double input, double pred_accel,
                        const PlatoonConfig& config, int vehicle_index);

/// j = (u - acc) / tau.
double Jerk(double accel, double input, double tau);

}  // namespace platoon
