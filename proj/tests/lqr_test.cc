#include "platoon/lqr.h"

#include <cmath>

#include <gtest/gtest.h>

namespace platoon {
namespace {

LqrProblem Scalar(double a, double b, double q, double r, int horizon) {
  LqrProblem p;
  p.a = Eigen::MatrixXd::Constant(1, 1, a);
  p.b = Eigen::MatrixXd::Constant(1, 1, b);
  p.q = Eigen::MatrixXd::Constant(1, 1, q);
  p.r = r;
  p.cross = Eigen::VectorXd::Zero(1);
  p.horizon = horizon;
  return p;
}

double StageCost(const LqrProblem& p, const Eigen::VectorXd& x, double u) {
  return x.dot(p.q * x) + 2.0 * u * x.dot(p.cross) + p.r * u * u;
}

TEST(Riccati, ScalarConvergesToGoldenRatio) {
  const GainSchedule s = RiccatiBackward(Scalar(1, 1, 1, 1, 60));
  ASSERT_EQ(s.gains.size(), 59u);
  EXPECT_NEAR(s.gains.front()(0), (std::sqrt(5.0) - 1.0) / 2.0, 1e-9);
  EXPECT_NEAR(s.cost_to_go.front()(0, 0), (1.0 + std::sqrt(5.0)) / 2.0, 1e-9);
  // Last decision: P_K = 1, so gain = 1 / 2.
  EXPECT_DOUBLE_EQ(s.gains.back()(0), 0.5);
}

TEST(Riccati, HorizonOneHasNoDecisions) {
  const GainSchedule s = RiccatiBackward(Scalar(1, 1, 1, 1, 1));
  EXPECT_TRUE(s.gains.empty());
  EXPECT_EQ(s.cost_to_go.size(), 1u);
  EXPECT_EQ(StationarityThreshold(s), 0);
  EXPECT_THROW(RiccatiBackward(Scalar(1, 1, 1, 1, 0)), std::invalid_argument);
  EXPECT_THROW(RiccatiBackward(Scalar(1, 1, -1, 1, 3)), std::invalid_argument);
}

TEST(BuildLqrProblem, MatchesQuadraticReward) {
  PlatoonConfig config;
  RewardWeights weights;
  const LqrProblem p = BuildLqrProblem(config, weights);
  EXPECT_DOUBLE_EQ(p.r, 0.3);
  EXPECT_EQ(p.horizon, 100);
  // -reward / lambda equals the LQR stage cost on the quadratic branch.
  for (double ep : {-0.5, 0.0, 0.3}) {
    for (double acc : {-1.0, 0.2}) {
      for (double u : {-0.4, 0.0, 0.7}) {
        const FollowerObservation obs{{ep, 0.2, acc}, {0.1, 0.3}};
        const double reward = StepReward(obs, u, config, 1, weights);
        Eigen::VectorXd x(3);
        x << ep, 0.2, acc;
        EXPECT_NEAR(-reward / weights.scale, StageCost(p, x, u), 1e-9);
      }
    }
  }
}

TEST(BuildLqrProblem, NoJerkWeightDropsCrossTerm) {
  RewardWeights weights;
  weights.c = 0.0;
  const LqrProblem p = BuildLqrProblem(PlatoonConfig{}, weights);
  EXPECT_EQ(p.cross.norm(), 0.0);
  EXPECT_DOUBLE_EQ(p.r, weights.b);
}

TEST(Riccati, GainsMinimizeOneStepLookahead) {
  PlatoonConfig config;
  config.horizon = 20;
  const LqrProblem p = BuildLqrProblem(config, RewardWeights{});
  const GainSchedule s = RiccatiBackward(p);
  Eigen::VectorXd x(3);
  x << 0.8, -0.3, 0.5;
  for (int k : {1, 10, 19}) {
    const Eigen::MatrixXd& next_p = s.cost_to_go[static_cast<size_t>(k)];
    double best_u = 0.0, best = INFINITY;
    for (double u = -3.0; u <= 3.0; u += 1e-4) {
      const Eigen::VectorXd y = p.a * x + p.b.col(0) * u;
      const double cost = StageCost(p, x, u) + y.dot(next_p * y);
      if (cost < best) {
        best = cost;
        best_u = u;
      }
    }
    EXPECT_NEAR(-s.gains[static_cast<size_t>(k - 1)].dot(x), best_u, 1e-4) << "k=" << k;
  }
}

TEST(Riccati, CostToGoMatchesClosedLoopRollout) {
  PlatoonConfig config;
  config.horizon = 30;
  const LqrProblem p = BuildLqrProblem(config, RewardWeights{});
  const GainSchedule s = RiccatiBackward(p);
  Eigen::VectorXd x(3);
  x << 1.0, 0.5, -0.2;
  const double predicted = x.dot(s.cost_to_go.front() * x);
  double total = 0.0;
  for (int k = 1; k < p.horizon; ++k) {
    const double u = -s.gains[static_cast<size_t>(k - 1)].dot(x);
    total += StageCost(p, x, u);
    x = p.a * x + p.b.col(0) * u;
  }
  total += x.dot(p.q * x);
  EXPECT_NEAR(total, predicted, 1e-9 * std::max(1.0, predicted));
}

TEST(Riccati, ScaleInvariantGainsAndPsdCostToGo) {
  const LqrProblem p = BuildLqrProblem(PlatoonConfig{}, RewardWeights{});
  LqrProblem scaled = p;
  scaled.q *= 7.0;
  scaled.r *= 7.0;
  scaled.cross *= 7.0;
  const GainSchedule a = RiccatiBackward(p), b = RiccatiBackward(scaled);
  for (size_t i = 0; i < a.gains.size(); ++i) EXPECT_LT((a.gains[i] - b.gains[i]).norm(), 1e-9);
  for (const auto& m : a.cost_to_go) {
    EXPECT_LT((m - m.transpose()).norm(), 1e-12);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(StationarityThreshold, Edges) {
  GainSchedule equal;
  equal.gains.assign(9, Eigen::RowVectorXd::Constant(3, 0.4));
  EXPECT_EQ(StationarityThreshold(equal), 9);
  EXPECT_EQ(StationarityThreshold(equal, 0.0), 0);

  GainSchedule drift;
  for (int k = 1; k <= 5; ++k) drift.gains.push_back(Eigen::RowVectorXd::Constant(1, 1.0 + 0.004 * (k - 1)));
  // Deviations 0, 0.004, 0.008, 0.012, 0.016.
  EXPECT_EQ(StationarityThreshold(drift, 0.01), 3);
  const auto report = LqrReport(drift, 0.01);
  EXPECT_EQ(report["m"], 3);
  EXPECT_EQ(report["steps"].size(), 5u);
  EXPECT_NEAR(report["steps"][4]["deviation"].get<double>(), 0.016, 1e-12);
}

TEST(StationarityThreshold, DefaultConfigurationIsLongAndStable) {
  const GainSchedule s = RiccatiBackward(BuildLqrProblem(PlatoonConfig{}, RewardWeights{}));
  const int m = StationarityThreshold(s);
  EXPECT_GT(m, 0);
  EXPECT_LT(m, 99);
  // Tightening the tolerance can only shrink the stationary prefix.
  EXPECT_LE(StationarityThreshold(s, 1e-3), m);
}

}  // namespace
}  // namespace platoon
