#include "platoon/lqr.h"

#include <cmath>
#include <stdexcept>

namespace platoon {
namespace {

bool IsSymmetricPsd(const Eigen::MatrixXd& m) {
  if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm())) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvalues().minCoeff() >= -1e-10;
}

}  // namespace

LqrProblem BuildLqrProblem(const PlatoonConfig& config, const RewardWeights& weights, int vehicle_index) {
  config.Validate();
  // Only the quadratic branch matters here, so a zero velocity or jerk weight
  // is allowed.
  if (!(weights.a >= 0.0 && weights.b > 0.0 && weights.c >= 0.0)) {
    throw std::invalid_argument("BuildLqrProblem: need a >= 0, b > 0, c >= 0");
  }
  const DynamicsMatrices dyn = BuildMatrices(config, vehicle_index);
  const double ratio = config.step_interval / config.tau.at(static_cast<size_t>(vehicle_index));
  const double jerk = weights.c * ratio * ratio;

  LqrProblem p;
  p.a = dyn.a;
  p.b = dyn.b;
  p.q = Eigen::Vector3d(1.0, weights.a, jerk).asDiagonal();
  p.r = weights.b + jerk;
  p.cross = Eigen::Vector3d(0.0, 0.0, -jerk);
  p.horizon = config.horizon;
  return p;
}

GainSchedule RiccatiBackward(const LqrProblem& problem) {
  if (problem.horizon < 1) throw std::invalid_argument("RiccatiBackward: horizon must be >= 1");
  if (!IsSymmetricPsd(problem.q)) throw std::invalid_argument("RiccatiBackward: terminal cost is not symmetric PSD");
  const Eigen::MatrixXd& a = problem.a;
  const Eigen::MatrixXd& b = problem.b;
  const Eigen::MatrixXd n = problem.cross;

  GainSchedule out;
  out.gains.resize(static_cast<size_t>(problem.horizon - 1));
  out.cost_to_go.resize(static_cast<size_t>(problem.horizon));
  Eigen::MatrixXd p = problem.q;
  out.cost_to_go.back() = p;
  for (int k = problem.horizon - 1; k >= 1; --k) {
    const double denom = problem.r + (b.transpose() * p * b)(0, 0);
    if (!(denom > 0.0)) throw std::runtime_error("RiccatiBackward: input cost not positive");
    const Eigen::RowVectorXd gain = (b.transpose() * p * a + n.transpose()) / denom;
    Eigen::MatrixXd next = problem.q + a.transpose() * p * a - (a.transpose() * p * b + n) * gain;
    p = 0.5 * (next + next.transpose());
    out.gains[static_cast<size_t>(k - 1)] = gain;
    out.cost_to_go[static_cast<size_t>(k - 1)] = p;
  }
  return out;
}

std::vector<double> GainDeviations(const GainSchedule& schedule) {
  std::vector<double> dev;
  if (schedule.gains.empty()) return dev;
  const Eigen::RowVectorXd& first = schedule.gains.front();
  const double scale = first.norm();
  for (const auto& g : schedule.gains) {
    const double diff = (g - first).norm();
    dev.push_back(scale > 0.0 ? diff / scale : (diff == 0.0 ? 0.0 : INFINITY));
  }
  return dev;
}

int StationarityThreshold(const GainSchedule& schedule, double tol) {
  int m = 0;
  for (double d : GainDeviations(schedule)) {
    if (!(d < tol)) break;
    ++m;
  }
  return m;
}

nlohmann::json LqrReport(const GainSchedule& schedule, double tol) {
  const std::vector<double> dev = GainDeviations(schedule);
  nlohmann::json steps = nlohmann::json::array();
  for (size_t i = 0; i < schedule.gains.size(); ++i) {
    const Eigen::RowVectorXd& g = schedule.gains[i];
    steps.push_back({{"k", i + 1},
                     {"gain", std::vector<double>(g.data(), g.data() + g.size())},
                     {"deviation", dev[i]}});
  }
  return {{"tolerance", tol}, {"m", StationarityThreshold(schedule, tol)}, {"steps", steps}};
}

}  // namespace platoon
