// Acceptance suite. `acceptance <n>` checks criterion n (1-12), `acceptance all`
// checks every criterion. Each check prints one PASS/FAIL line; the exit code
// is non-zero when any checked criterion fails.
//
// Criteria 8-12 need trained desk-scale runs. They are cached under the
// directory given by --cache (default ./acceptance_cache) and reused when the
// stored configuration matches.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "platoon/eval.h"
#include "platoon/lqr.h"
#include "platoon/rl.h"
#include "platoon/trainer.h"
#include "toy_env.h"

namespace platoon {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Format(const char* fmt, ...) {
  char buf[1024];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string Join(const std::vector<double>& v, const char* fmt = "%.4f") {
  std::string out = "[";
  for (size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + Format(fmt, v[i]);
  return out + "]";
}

// ---------------------------------------------------------------------------
// 1. Dynamics against a hand-assembled matrix product.

Outcome Dynamics() {
  const auto start = std::chrono::steady_clock::now();
  const PlatoonConfig config;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> err(-5.0, 5.0), acc(-2.6, 2.6);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const int vehicle = 1 + i % 4;
    const double t = config.step_interval;
    const double tau = config.tau[static_cast<size_t>(vehicle)];
    const double h = config.time_gap[static_cast<size_t>(vehicle)];
    Eigen::Matrix3d a;
    a << 1, t, -h * t, 0, 1, -t, 0, 0, 1 - t / tau;
    const Eigen::Vector3d b(0, 0, t / tau), c(0, t, 0);
    const LocalState x{err(rng), err(rng), acc(rng)};
    const double u = acc(rng), pred = acc(rng);
    Eigen::Vector3d oracle = a * x.AsVector() + b * u + c * pred;
    oracle(2) = std::clamp(oracle(2), config.accel_min, config.accel_max);
    const LocalState got = FollowerStep(x, u, pred, config, vehicle);
    worst = std::max(worst, (got.AsVector() - oracle).cwiseAbs().maxCoeff());
  }
  const double elapsed = Seconds(start);
  return {worst <= 1e-12 && elapsed < 1.0,
          Format("max |step - matrix oracle| = %.3g over 1e4 draws in %.3f s", worst, elapsed)};
}

// ---------------------------------------------------------------------------
// 2. Reward branches and worked examples.

Outcome RewardOracle() {
  const PlatoonConfig c;
  const RewardWeights w;
  auto r = [&](double ep, double ev, double u, double j) {
    return Reward(ep, ev, u, j, c.accel_max, c.input_max, c.step_interval, w);
  };
  const double e1 = r(1.5, -1.0, 1.0, 10.0);
  const double e2 = r(-10.0, 5.0, 2.6, 26.0);
  const double e3 = r(0.0, 0.0, 0.0, 0.0);
  // Hand-evaluated branches: quadratic for the first, absolute for the second.
  const double want1 = -0.005 * (2.25 + 0.1 * 1.0 + 0.1 * 1.0 + 0.2 * 1.0);
  const double want2 = -(10.0 / 15.0 + 0.1 * 5.0 / 10.0 + 0.1 * 2.6 / 2.6 + 0.2 * 26.0 / 52.0);
  bool ok = std::abs(e1 - (-0.01325)) <= 1e-9 && std::abs(e1 - want1) <= 1e-12 &&
            std::abs(e2 - want2) <= 1e-9 && std::abs(e2 - (-0.9167)) <= 5e-5 && e3 == 0.0;

  int checked = 0, wrong = 0, absolute = 0;
  for (double ep = -9.0; ep <= 9.0; ep += 2e-3) {
    for (double ev : {-1.0, 0.3}) {
      const double u = 0.7, j = -3.0;
      const double ra = (std::abs(ep) / w.nominal_gap_error + w.a * std::abs(ev) / w.nominal_velocity_error +
                         w.b * std::abs(u) / c.input_max + w.c * std::abs(j) / (2.0 * c.accel_max / c.step_interval));
      const double rq = w.scale * (ep * ep + w.a * ev * ev + w.b * u * u + w.c * (j * c.step_interval) * (j * c.step_interval));
      const double expected = -ra < w.threshold ? -ra : -rq;
      absolute += -ra < w.threshold;
      wrong += std::abs(r(ep, ev, u, j) - expected) > 1e-12;
      ++checked;
    }
  }
  ok = ok && wrong == 0 && absolute > 0 && absolute < checked;
  return {ok, Format("examples %.9f, %.9f, %g; grid %d points (%d absolute branch), %d mismatches", e1, e2, e3 + 0.0,
                     checked, absolute, wrong)};
}

// ---------------------------------------------------------------------------
// 3. Gradient check on full-size networks.

double WorstGradientError(const Mlp& net, bool critic, int probes, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::VectorXd x(net.spec().input_dim);
  for (int d = 0; d < x.size(); ++d) x(d) = n(rng);
  const Eigen::RowVectorXd action = Eigen::RowVectorXd::Constant(1, 0.4);
  const Eigen::RowVectorXd* a = critic ? &action : nullptr;
  ForwardCache cache;
  net.Forward(x, a, &cache);
  const MlpGradients g = net.Backward(cache, Eigen::MatrixXd::Ones(1, 1));
  const double h = 1e-6;
  auto rel = [](double numeric, double analytic) {
    return std::abs(numeric - analytic) / std::max(1e-3, std::abs(numeric) + std::abs(analytic));
  };
  double worst = 0.0;
  Mlp probe = net;
  std::uniform_int_distribution<size_t> layer(0, net.weights().w.size() - 1);
  for (int p = 0; p < probes; ++p) {
    const size_t l = layer(rng);
    auto& w = probe.mutable_weights().w[l];
    double* param;
    double analytic;
    if (p % 4 == 3) {
      const Eigen::Index i = std::uniform_int_distribution<Eigen::Index>(0, w.rows() - 1)(rng);
      param = &probe.mutable_weights().b[l](i);
      analytic = g.params.b[l](i);
    } else {
      const Eigen::Index i = std::uniform_int_distribution<Eigen::Index>(0, w.rows() - 1)(rng);
      const Eigen::Index j = std::uniform_int_distribution<Eigen::Index>(0, w.cols() - 1)(rng);
      param = &w(i, j);
      analytic = g.params.w[l](i, j);
    }
    const double orig = *param;
    *param = orig + h;
    const double up = probe.Forward(x, a)(0, 0);
    *param = orig - h;
    const double down = probe.Forward(x, a)(0, 0);
    *param = orig;
    worst = std::max(worst, rel((up - down) / (2 * h), analytic));
  }
  if (critic) {
    const Eigen::RowVectorXd up = Eigen::RowVectorXd::Constant(1, 0.4 + h);
    const Eigen::RowVectorXd down = Eigen::RowVectorXd::Constant(1, 0.4 - h);
    worst = std::max(worst, rel((net.Forward(x, &up)(0, 0) - net.Forward(x, &down)(0, 0)) / (2 * h), g.action(0)));
  }
  return worst;
}

Outcome Gradients() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<int> hidden = {400, 300, 100};
  Mlp actor = Mlp::Initialize(ActorSpec(kObservationDim, hidden, -2.6, 2.6), uint64_t{11});
  Mlp critic = Mlp::Initialize(CriticSpec(kObservationDim, hidden), uint64_t{12});
  // The default output layer is nearly flat; scale it so derivatives are not
  // all below the absolute floor.
  actor.mutable_weights().w.back() *= 100.0;
  critic.mutable_weights().w.back() *= 100.0;
  const double ea = WorstGradientError(actor, false, 100, 1);
  const double ec = WorstGradientError(critic, true, 100, 2);
  const double elapsed = Seconds(start);
  return {ea < 1e-5 && ec < 1e-5 && elapsed < 60.0,
          Format("400-300-100 nets, 100 probes each: actor %.3g, critic %.3g relative error in %.1f s", ea, ec,
                 elapsed)};
}

// ---------------------------------------------------------------------------
// 4. Ornstein-Uhlenbeck stationary variance.

Outcome OuVariance() {
  OuNoise noise(0.15, 0.5);
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) noise.Step(rng);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = noise.Step(rng);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  const double expected = 0.25 / (1.0 - 0.85 * 0.85);
  return {std::abs(var / 0.9009 - 1.0) < 0.05,
          Format("variance %.4f vs %.4f (closed form %.4f), mean %.4f", var, 0.9009, expected, mean)};
}

// ---------------------------------------------------------------------------
// 5. Riccati recursion and the stationarity threshold.

Outcome Riccati() {
  LqrProblem scalar;
  scalar.a = scalar.b = scalar.q = Eigen::MatrixXd::Ones(1, 1);
  scalar.r = 1.0;
  scalar.cross = Eigen::VectorXd::Zero(1);
  scalar.horizon = 80;
  const double golden = RiccatiBackward(scalar).gains.front()(0);

  const RunConfig config = DefaultRunConfig();
  const GainSchedule schedule = RiccatiBackward(BuildLqrProblem(config.platoon, config.reward));
  const int m = StationarityThreshold(schedule, 0.01);
  const auto dev = GainDeviations(schedule);
  bool prefix_ok = m >= 1 && m < config.platoon.horizon - 1;
  for (int k = 1; k <= m; ++k) prefix_ok = prefix_ok && dev[static_cast<size_t>(k - 1)] < 0.01;
  const bool near_reference = std::abs(m - config.threshold) <= 10;
  return {std::abs(golden - 0.618034) < 1e-6 && prefix_ok && near_reference,
          Format("scalar gain %.7f; platoon m = %d (deviation %.4f at k = m, %.4f at k = m+1) vs reference m = %d, "
                 "tolerance +/-10",
                 golden, m, m >= 1 ? dev[static_cast<size_t>(m - 1)] : NAN,
                 static_cast<size_t>(m) < dev.size() ? dev[static_cast<size_t>(m)] : NAN, config.threshold)};
}

// ---------------------------------------------------------------------------
// 6. Structural invariants on a K = 10 miniature.

RunConfig Miniature() {
  RunConfig c = DeskRunConfig();
  c.platoon.horizon = 10;
  c.threshold = 4;
  for (LearnerConfig* l : {&c.fh, &c.baseline}) {
    l->hidden = {16, 16};
    l->ddpg.episodes = 30;
    l->ddpg.batch_size = 8;
    l->ddpg.eval_every = 10;
    l->ddpg.eval_episodes = 2;
  }
  c.ss.phase1_episodes = 20;
  c.ss.phase2_episodes = 10;
  c.ss.test_episodes = 5;
  c.data.synthetic_episodes = 20;
  return c;
}

Outcome Structure() {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig c = Miniature();
  const int horizon = c.platoon.horizon, m = c.threshold;
  const TraceSplit split = LoadTraceSplit(c);
  TrainOptions opts;
  opts.followers = 2;
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  auto check_stage = [&](const TrainingAudit& audit, const StageAudit& s, const std::string& tag) {
    // Fixed targets never change, and a stage reads only later steps (or its
    // own carried-over networks, or the random draw).
    expect(s.target_actor_hash_before == s.target_actor_hash_after || s.step == 0, tag + ": actor target moved");
    expect(s.target_critic_hash_before == s.target_critic_hash_after || s.step == 0, tag + ": critic target moved");
    for (int r : s.weight_reads) {
      const bool allowed = r == -1 || (s.step > 0 && r > s.step) || (s.step == 0 && r == m + 1) ||
                           (s.init_source == InitSource::kCarriedOver && r == s.step);
      expect(allowed, tag + Format(": step %d read step %d", s.step, r));
    }
    if (s.step >= 1 && s.step < horizon - 1) {
      const StageAudit* next = audit.Find(s.step + 1, s.phase);
      expect(next != nullptr && s.target_critic_hash_before == next->trained_critic_hash,
             tag + Format(": step %d targets are not trained(k+1)", s.step));
    }
    expect(s.used_myopic_terminal == (s.step == horizon - 1), tag + ": myopic terminal flag");
  };

  for (Algorithm a : {Algorithm::kFhDdpg, Algorithm::kFhDdpgNb, Algorithm::kFhDdpgSa, Algorithm::kFhDdpgSs}) {
    const TrainResult result = TrainPlatoon(a, c, split.train, split.train, 5, opts);
    const std::string name = AlgorithmName(a);
    for (size_t f = 0; f < result.audits.size(); ++f) {
      const TrainingAudit& audit = result.audits[f];
      const PolicySet& set = result.policies[f];
      const std::string tag = name + Format(" follower %zu", f + 1);
      // Backward order within each phase: K-1 first, then decreasing, head last.
      int last_phase = 0, last_step = horizon;
      for (const auto& s : audit.stages) {
        if (s.phase != last_phase) {
          last_phase = s.phase;
          last_step = horizon;
        }
        const int effective = s.step == 0 ? 0 : s.step;
        expect(effective < last_step, tag + ": stages out of backward order");
        last_step = effective;
        check_stage(audit, s, tag);
      }
      if (a == Algorithm::kFhDdpgNb) {
        for (int k = 1; k < horizon - 1; ++k) {
          const StageAudit* s = audit.Find(k);
          expect(s->init_actor_hash == audit.Find(k + 1)->trained_actor_hash &&
                     s->init_critic_hash == audit.Find(k + 1)->trained_critic_hash,
                 tag + Format(": NB chain broken at %d", k));
        }
      }
      if (a == Algorithm::kFhDdpgSa || a == Algorithm::kFhDdpgSs) {
        const int phase = a == Algorithm::kFhDdpgSs ? 2 : 1;
        const StageAudit* head = audit.Find(0, phase);
        expect(head != nullptr, tag + ": no stationary head");
        bool same = true;
        for (int k = 1; k <= m; ++k) same = same && &set.At(k) == &set.head();
        expect(same && WeightHash(set.head().actor.weights()) == head->trained_actor_hash,
               tag + ": steps 1..m do not share the head");
        expect(head->target_actor_hash_before == audit.Find(m + 1, phase)->trained_actor_hash,
               tag + ": head targets do not start at trained(m+1)");
      }
      if (a == Algorithm::kFhDdpgSs) {
        expect(audit.reduced_boxes.size() == static_cast<size_t>(horizon), tag + ": reduced box count");
        for (const auto& b : audit.reduced_boxes) expect(audit.large_box.Contains(b), tag + ": box not contained");
        expect(audit.phase1_final_hash == audit.phase2_initial_hash, tag + ": phase hashes differ");
        for (const auto& s : audit.stages) {
          if (s.phase != 2) continue;
          const StageAudit* p1 = audit.Find(s.step, 1);
          expect(s.init_source == InitSource::kCarriedOver && p1 != nullptr &&
                     s.init_actor_hash == p1->trained_actor_hash && s.init_critic_hash == p1->trained_critic_hash,
                 tag + Format(": phase 2 step %d does not continue phase 1", s.step));
        }
      }
    }
  }
  const double elapsed = Seconds(start);
  expect(elapsed < 120.0, "runtime");
  std::string detail = Format("FH-DDPG, NB, SA, SS on K=10 with 2 followers in %.1f s", elapsed);
  if (!failures.empty()) detail += "; first violation: " + failures.front() + Format(" (%zu total)", failures.size());
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------------------
// 7. Dynamic-programming oracle on a 3-step toy problem.

Outcome DpOracle() {
  const auto start = std::chrono::steady_clock::now();
  const double cell = 0.1;
  ToyEnvironment env(3, 0.05);
  const ToyDp dp(env, 3, 81, cell);
  std::vector<double> within, mean;
  for (uint64_t seed : {1, 2, 3}) {
    std::mt19937_64 rng(seed);
    const DpGap gap = CompareWithDp(FhDdpg(env, ToyFhConfig(env), rng), dp, cell, 2);
    within.push_back(gap.within_cell);
    mean.push_back(gap.mean);
  }
  const double elapsed = Seconds(start);
  return {Median(within) >= 0.9 && elapsed < 300.0,
          Format("fraction of probes within one %.2f action cell %s (median %.3f), mean gap %s, %.1f s", cell,
                 Join(within, "%.3f").c_str(), Median(within), Join(mean, "%.3f").c_str(), elapsed)};
}

// ---------------------------------------------------------------------------
// Trained desk-scale runs shared by criteria 8-12.

const std::vector<uint64_t> kSeeds = {1, 2, 3};
constexpr int kFollowers = 4;

class RunCache {
 public:
  explicit RunCache(fs::path root) : root_(std::move(root)), config_(DeskRunConfig()) {}

  const RunConfig& config() const { return config_; }
  const TraceSplit& split() {
    if (!split_) split_ = LoadTraceSplit(config_);
    return *split_;
  }

  /// Directory of a run with at least `followers` trained followers.
  fs::path Ensure(Algorithm a, uint64_t seed, int followers) {
    const fs::path dir = root_ / AlgorithmName(a) / std::to_string(seed);
    if (Usable(dir, followers)) return dir;
    std::printf("  training %s seed %llu (%d followers) ...\n", AlgorithmName(a).c_str(),
                static_cast<unsigned long long>(seed), followers);
    std::fflush(stdout);
    const auto start = std::chrono::steady_clock::now();
    TrainOptions opts;
    opts.followers = followers;
    const TrainResult result = TrainPlatoon(a, config_, split().train, split().train, seed, opts);
    fs::remove_all(dir);
    SaveTrainResult(dir, result, config_, seed);
    std::printf("  ... done in %.0f s\n", Seconds(start));
    std::fflush(stdout);
    return dir;
  }

  std::vector<PolicySet> Policies(Algorithm a, uint64_t seed, int followers) {
    std::vector<PolicySet> sets = LoadRunPolicies(Ensure(a, seed, followers), config_);
    sets.resize(static_cast<size_t>(followers));
    return sets;
  }

  EvalResult Evaluate(const std::vector<PolicySet>& sets) {
    const std::vector<Policy> policies = MakePolicies(sets);
    return platoon::Evaluate(policies, split().test, config_.test_episodes, config_.platoon, config_.reward);
  }

 private:
  bool Usable(const fs::path& dir, int followers) const {
    std::ifstream meta_in(dir / "run.json");
    std::ifstream config_in(dir / "config.ini");
    if (!meta_in || !config_in) return false;
    try {
      const nlohmann::json meta = nlohmann::json::parse(meta_in);
      std::stringstream text;
      text << config_in.rdbuf();
      return meta.at("followers").get<int>() >= followers && text.str() == FormatRunConfig(config_);
    } catch (const std::exception&) {
      return false;
    }
  }

  fs::path root_;
  RunConfig config_;
  std::optional<TraceSplit> split_;
};

// 8. Desk-scale smoke: one follower, FH-DDPG vs its random initialization.

Outcome DeskSmoke(RunCache& cache) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig& c = cache.config();
  std::vector<double> trained, random, final_gap;
  for (uint64_t seed : kSeeds) {
    const auto sets = cache.Policies(Algorithm::kFhDdpg, seed, 1);
    const EvalResult r = cache.Evaluate(sets);
    trained.push_back(r.report.followers[0].mean);
    std::vector<double> gaps;
    for (const auto& episode : r.logs) gaps.push_back(std::abs(episode[0].steps.back().gap_error));
    final_gap.push_back(Median(gaps));

    // Every step starts from the same random draw before training.
    std::mt19937_64 rng(seed);
    const ProblemContext ctx{c.platoon, c.reward, 1};
    const ActorCritic init =
        InitializeActorCritic(ActorSpec(kObservationDim, c.fh.hidden, c.platoon.input_min, c.platoon.input_max),
                              CriticSpec(kObservationDim, c.fh.hidden), rng);
    PolicySet untrained(ctx, 0);
    for (int k = 1; k < c.platoon.horizon; ++k) untrained.SetStep(k, init);
    random.push_back(cache.Evaluate({untrained}).report.followers[0].mean);
  }
  const double mt = Median(trained), mr = Median(random), mg = Median(final_gap);
  const double elapsed = Seconds(start);
  return {mt >= mr / 3.0 && mg < 0.2,
          Format("median return trained %.4f vs random init %.4f (ratio %.1fx); median |e_p| at k=K %.3f m; "
                 "per seed %s vs %s; %.0f s",
                 mt, mr, mr / mt, mg, Join(trained).c_str(), Join(random).c_str(), elapsed)};
}

// 9. Ordering of the sum performance at equal budget.

Outcome Ordering(RunCache& cache) {
  std::map<Algorithm, std::vector<double>> sums;
  for (uint64_t seed : kSeeds) {
    for (Algorithm a : {Algorithm::kFhDdpgSs, Algorithm::kFhDdpg, Algorithm::kDdpg}) {
      sums[a].push_back(cache.Evaluate(cache.Policies(a, seed, kFollowers)).report.sum_performance);
    }
    const double ss = sums[Algorithm::kFhDdpgSs].back(), fh = sums[Algorithm::kFhDdpg].back(),
                 dd = sums[Algorithm::kDdpg].back();
    if (!(ss >= fh && fh >= dd)) {
      std::printf("  warning: seed %llu ordering violated (SS %.4f, FH %.4f, DDPG %.4f)\n",
                  static_cast<unsigned long long>(seed), ss, fh, dd);
    }
  }
  const double ss = Median(sums[Algorithm::kFhDdpgSs]), fh = Median(sums[Algorithm::kFhDdpg]),
               dd = Median(sums[Algorithm::kDdpg]);
  return {ss >= fh && fh >= dd,
          Format("median sum performance FH-DDPG-SS %.4f, FH-DDPG %.4f, DDPG %.4f; per seed SS %s FH %s DDPG %s", ss,
                 fh, dd, Join(sums[Algorithm::kFhDdpgSs]).c_str(), Join(sums[Algorithm::kFhDdpg]).c_str(),
                 Join(sums[Algorithm::kDdpg]).c_str())};
}

// 10. Spread of the learning curve over the second half of training.

double LateCurveStd(const fs::path& run) {
  const auto curve = ReadCurveCsv(run / "curve.csv");
  std::map<int, std::vector<const CurvePoint*>> by_follower;
  int last = 0;
  for (const auto& p : curve) {
    by_follower[p.follower].push_back(&p);
    last = std::max(last, p.episode);
  }
  double total = 0.0;
  for (const auto& [follower, points] : by_follower) {
    std::vector<double> late;
    for (const auto* p : points) {
      if (2 * p->episode >= last) late.push_back(p->eval_return);
    }
    double mean = 0.0, sq = 0.0;
    for (double v : late) mean += v;
    mean /= static_cast<double>(late.size());
    for (double v : late) sq += (v - mean) * (v - mean);
    total += std::sqrt(sq / static_cast<double>(late.size()));
  }
  return total / static_cast<double>(by_follower.size());
}

Outcome Stability(RunCache& cache) {
  std::vector<double> ss, dd;
  bool ok = true;
  for (uint64_t seed : kSeeds) {
    ss.push_back(LateCurveStd(cache.Ensure(Algorithm::kFhDdpgSs, seed, kFollowers)));
    dd.push_back(LateCurveStd(cache.Ensure(Algorithm::kDdpg, seed, kFollowers)));
    ok = ok && ss.back() < dd.back();
  }
  return {ok, Format("std of evaluation returns over the last half of training (mean over followers): "
                     "FH-DDPG-SS %s vs DDPG %s",
                     Join(ss, "%.5f").c_str(), Join(dd, "%.5f").c_str())};
}

// 11. No collisions for trained FH-DDPG-SS policies.

Outcome Safety(RunCache& cache) {
  bool collision = false;
  std::vector<double> worst_gap, min_headway;
  for (uint64_t seed : kSeeds) {
    const SafetyReport s = cache.Evaluate(cache.Policies(Algorithm::kFhDdpgSs, seed, kFollowers)).report.safety;
    collision = collision || s.collision;
    worst_gap.push_back(s.most_negative_gap_error);
    min_headway.push_back(s.min_headway);
  }
  return {!collision, Format("%s over %d test episodes x %zu seeds; most negative e_p %s m, min headway %s m",
                             collision ? "collision" : "no collision", cache.config().test_episodes, kSeeds.size(),
                             Join(worst_gap, "%.3f").c_str(), Join(min_headway, "%.3f").c_str())};
}

// 12. String stability under a leader acceleration pulse.

Outcome StringStability(RunCache& cache) {
  bool ok = true;
  std::string detail = "peak |e_v| per follower:";
  for (uint64_t seed : kSeeds) {
    const auto sets = cache.Policies(Algorithm::kFhDdpgSs, seed, kFollowers);
    const std::vector<Policy> policies = MakePolicies(sets);
    const auto r = StringStabilityExperiment(policies, cache.config().platoon, cache.config().reward);
    ok = ok && r.attenuating;
    detail += Format(" seed %llu %s%s;", static_cast<unsigned long long>(seed),
                     Join(r.peak_velocity_error, "%.4f").c_str(), r.attenuating ? "" : " (not decreasing)");
  }
  return {ok, detail};
}

}  // namespace
}  // namespace platoon

int main(int argc, char** argv) {
  using namespace platoon;
  std::vector<int> criteria;
  fs::path cache_dir = "acceptance_cache";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cache" && i + 1 < argc) {
      cache_dir = argv[++i];
    } else if (arg == "all") {
      for (int n = 1; n <= 12; ++n) criteria.push_back(n);
    } else {
      char* end = nullptr;
      const long n = std::strtol(arg.c_str(), &end, 10);
      if (*end != '\0' || n < 1 || n > 12) {
        std::fprintf(stderr, "usage: %s [--cache DIR] (all | 1..12)...\n", argv[0]);
        return 2;
      }
      criteria.push_back(static_cast<int>(n));
    }
  }
  if (criteria.empty()) {
    std::fprintf(stderr, "usage: %s [--cache DIR] (all | 1..12)...\n", argv[0]);
    return 2;
  }

  RunCache cache(cache_dir);
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> checks = {
      {1, {"dynamics oracle", Dynamics}},
      {2, {"reward oracle", RewardOracle}},
      {3, {"gradient check", Gradients}},
      {4, {"OU noise variance", OuVariance}},
      {5, {"Riccati threshold", Riccati}},
      {6, {"structural invariants", Structure}},
      {7, {"DP oracle", DpOracle}},
      {8, {"desk training smoke", [&] { return DeskSmoke(cache); }}},
      {9, {"algorithm ordering", [&] { return Ordering(cache); }}},
      {10, {"convergence stability", [&] { return Stability(cache); }}},
      {11, {"safety", [&] { return Safety(cache); }}},
      {12, {"string stability", [&] { return StringStability(cache); }}},
  };
  int failed = 0;
  for (int n : criteria) {
    const auto& [name, check] = checks.at(n);
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %2d %-22s %s  %s\n", n, name, outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str());
    std::fflush(stdout);
    failed += !outcome.pass;
  }
  return failed == 0 ? 0 : 1;
}
