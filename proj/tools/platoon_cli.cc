// Command-line front end: train, eval, stability, lqr, gen-traces.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "platoon/eval.h"
#include "platoon/lqr.h"
#include "platoon/run_config.h"
#include "platoon/trainer.h"

namespace {

using platoon::RunConfig;

void ConfigureLogging() {
  const char* level = std::getenv("PLATOON_LOG_LEVEL");
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

RunConfig ResolveConfig(const std::string& preset, const std::string& config) {
  RunConfig base = platoon::ResolveRunConfig(preset);
  if (config.empty() || config == preset) return base;
  if (config == "default" || config == "desk") return platoon::ResolveRunConfig(config);
  return platoon::LoadRunConfig(config, base);
}

void WriteJson(const std::string& path, const nlohmann::json& doc) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

RunConfig RunDirConfig(const std::filesystem::path& run) {
  if (!std::filesystem::exists(run / "config.ini")) throw std::runtime_error("no trained run at " + run.string());
  return platoon::LoadRunConfig(run / "config.ini");
}

}  // namespace

int main(int argc, char** argv) {
  ConfigureLogging();
  CLI::App app{"Platoon control: finite-horizon DDPG training and evaluation"};
  app.require_subcommand(1);

  std::string preset = "default";
  std::string config;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "'default', 'desk' or an INI file");
    cmd->add_option("--preset", preset, "base parameters for a config file")->check(CLI::IsMember({"default", "desk"}));
  };

  auto* train = app.add_subcommand("train", "train follower policies");
  std::string algo;
  uint64_t seed = 1;
  std::string out_dir;
  int followers = 0;
  train->add_option("--algo", algo, "ddpg, fh-ddpg, fh-ddpg-nb, fh-ddpg-sa or fh-ddpg-ss")
      ->required()
      ->check(CLI::IsMember({"ddpg", "fh-ddpg", "fh-ddpg-nb", "fh-ddpg-sa", "fh-ddpg-ss"}));
  add_config(train);
  train->add_option("--seed", seed, "training seed");
  train->add_option("--out", out_dir, "output run directory")->required();
  train->add_option("--followers", followers, "number of followers to train (0 = all)");

  auto* eval = app.add_subcommand("eval", "evaluate a trained run on the test traces");
  std::string run_dir;
  int episodes = 0;
  std::string report;
  std::string logs_dir;
  bool jerk_clip = false;
  platoon::JerkClipOptions clip;
  int workers = 1;
  eval->add_option("--run", run_dir, "trained run directory")->required();
  eval->add_option("--episodes", episodes, "test episodes (default from the config)");
  eval->add_option("--report", report, "JSON report path ('-' for stdout)");
  eval->add_option("--logs", logs_dir, "directory for per-episode CSV logs");
  eval->add_flag("--jerk-clip", jerk_clip, "clip the jerk at test time");
  eval->add_option("--jerk-min", clip.jerk_min, "lower jerk bound");
  eval->add_option("--jerk-max", clip.jerk_max, "upper jerk bound");
  eval->add_option("--workers", workers, "evaluation threads")->check(CLI::PositiveNumber);

  auto* stability = app.add_subcommand("stability", "leader acceleration pulse experiment");
  stability->add_option("--run", run_dir, "trained run directory")->required();
  stability->add_option("--report", report, "JSON report path ('-' for stdout)");
  stability->add_option("--logs", logs_dir, "CSV log path");

  auto* lqr = app.add_subcommand("lqr", "gain schedule and stationarity threshold");
  double tol = 0.01;
  add_config(lqr);
  lqr->add_option("--tol", tol, "relative gain deviation tolerance")->check(CLI::PositiveNumber);
  lqr->add_option("--report", report, "JSON report path ('-' for stdout)");

  auto* gen = app.add_subcommand("gen-traces", "write synthetic leader traces");
  int trace_episodes = 10;
  std::string trace_out;
  add_config(gen);
  gen->add_option("--episodes", trace_episodes, "number of traces")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", trace_out, "CSV output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const RunConfig cfg = ResolveConfig(preset, config);
      const platoon::TraceSplit split = platoon::LoadTraceSplit(cfg);
      if (split.train.empty() || split.test.empty()) throw std::runtime_error("trace split left an empty set");
      platoon::TrainOptions options;
      options.followers = followers;
      options.log = [](const std::string& msg) { spdlog::info("{}", msg); };
      const auto result =
          platoon::TrainPlatoon(platoon::ParseAlgorithm(algo), cfg, split.train, split.test, seed, options);
      platoon::SaveTrainResult(out_dir, result, cfg, seed);
      spdlog::info("wrote {}", out_dir);
    } else if (*eval) {
      const RunConfig cfg = RunDirConfig(run_dir);
      const auto sets = platoon::LoadRunPolicies(run_dir, cfg);
      const auto policies = platoon::MakePolicies(sets);
      const platoon::TraceSplit split = platoon::LoadTraceSplit(cfg);
      const int n = episodes > 0 ? episodes : cfg.test_episodes;
      platoon::ActionFilter filter;
      if (jerk_clip) {
        clip.threshold = cfg.threshold;
        filter = platoon::MakeJerkClipFilter(cfg.platoon, clip);
      }
      const auto result = platoon::Evaluate(policies, split.test, n, cfg.platoon, cfg.reward, filter, workers);
      if (!logs_dir.empty()) {
        std::filesystem::create_directories(logs_dir);
        for (size_t e = 0; e < result.logs.size(); ++e) {
          platoon::WriteEpisodeCsv(std::filesystem::path(logs_dir) / ("episode_" + std::to_string(e + 1) + ".csv"),
                                   result.logs[e]);
        }
      }
      nlohmann::json doc = platoon::ToJson(result.report);
      doc["episode_ids"] = result.episode_ids;
      doc["jerk_clip"] = jerk_clip;
      WriteJson(report, doc);
    } else if (*stability) {
      const RunConfig cfg = RunDirConfig(run_dir);
      const auto sets = platoon::LoadRunPolicies(run_dir, cfg);
      const auto policies = platoon::MakePolicies(sets);
      const auto result = platoon::StringStabilityExperiment(policies, cfg.platoon, cfg.reward);
      if (!logs_dir.empty()) platoon::WriteEpisodeCsv(logs_dir, result.logs);
      WriteJson(report, {{"peak_velocity_error", result.peak_velocity_error},
                         {"peak_gap_error", result.peak_gap_error},
                         {"attenuating", result.attenuating}});
    } else if (*lqr) {
      const RunConfig cfg = ResolveConfig(preset, config);
      const auto schedule = platoon::RiccatiBackward(platoon::BuildLqrProblem(cfg.platoon, cfg.reward));
      WriteJson(report, platoon::LqrReport(schedule, tol));
    } else if (*gen) {
      const RunConfig cfg = ResolveConfig(preset, config);
      platoon::SaveTraces(trace_out, platoon::GenerateSyntheticTraces(trace_episodes, cfg.platoon, seed));
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
