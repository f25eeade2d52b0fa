#pragma once

#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "platoon/env.h"
#include "platoon/reward.h"

namespace platoon {

/// Finite-horizon discrete LQR with a state-input cross term:
///   sum_k x'Qx + 2 x'N u + R u^2,  x_{k+1} = A x_k + B u_k.
/// Dimensions are dynamic so the same recursion covers scalar checks.
struct LqrProblem {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;       // n x 1
  Eigen::MatrixXd q;
  double r = 1.0;
  Eigen::VectorXd cross;   // N, n x 1
  int horizon = 1;
};

/// Quadratic-branch cost for follower `vehicle_index` with the jerk term
/// expanded: c (jT)^2 = c (T/tau)^2 (u - acc)^2. The overall scale factor is
/// dropped since it cannot change the gains.
LqrProblem BuildLqrProblem(const PlatoonConfig& config, const RewardWeights& weights,
                           int vehicle_index = 1);

struct GainSchedule {
  /// gains[k-1] is the row gain at step k = 1..K-1; u_k = -gains[k-1] x_k.
  std::vector<Eigen::RowVectorXd> gains;
  /// cost_to_go[k-1] is P_k for k = 1..K; P_K = Q.
  std::vector<Eigen::MatrixXd> cost_to_go;
};

/// Backward Riccati recursion. Throws std::invalid_argument for an empty
/// horizon or a terminal cost that is not symmetric positive semidefinite.
GainSchedule RiccatiBackward(const LqrProblem& problem);

/// ||gain_k - gain_1|| / ||gain_1|| for k = 1..K-1.
std::vector<double> GainDeviations(const GainSchedule& schedule);

/// Largest m with every deviation for k <= m below `tol`; 0 if none.
int StationarityThreshold(const GainSchedule& schedule, double tol = 0.01);

/// Per-step gains and deviations plus the computed threshold.
nlohmann::json LqrReport(const GainSchedule& schedule, double tol);

}  // namespace platoon
