#include "platoon/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace platoon {
namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(Trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double ParseDouble(const std::string& text, size_t line_number) {
  size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw std::runtime_error("line " + std::to_string(line_number) + ": cannot parse number '" + text + "'");
  }
  return value;
}

}  // namespace

LeaderInputs DeriveLeaderInputs(const std::vector<double>& velocity, const PlatoonConfig& config) {
  if (velocity.size() < 3) throw std::invalid_argument("DeriveLeaderInputs: need at least 3 samples");
  const double t = config.step_interval;
  const double tau = config.tau.at(0);
  LeaderInputs out;
  out.accel.resize(velocity.size() - 1);
  for (size_t k = 0; k + 1 < velocity.size(); ++k) {
    out.accel[k] = ClampAcceleration((velocity[k + 1] - velocity[k]) / t, config);
  }
  out.input.resize(velocity.size() - 2);
  for (size_t k = 0; k + 1 < out.accel.size(); ++k) {
    out.input[k] = ClampAction(tau * (out.accel[k + 1] - out.accel[k]) / t + out.accel[k], config);
  }
  return out;
}

LeaderTrace MakeLeaderTrace(std::string episode_id, std::vector<double> velocity,
                            const PlatoonConfig& config) {
  if (velocity.size() < static_cast<size_t>(config.horizon) + 2) {
    throw std::runtime_error("trace '" + episode_id + "' has " + std::to_string(velocity.size()) +
                             " samples; need at least " + std::to_string(config.horizon + 2));
  }
  LeaderInputs derived = DeriveLeaderInputs(velocity, config);
  return {std::move(episode_id), std::move(velocity), std::move(derived.accel), std::move(derived.input)};
}

std::vector<LeaderTrace> LoadTraces(const std::filesystem::path& path, const PlatoonConfig& config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path.string());

  std::string line;
  size_t line_number = 0;
  bool have_header = false;
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<long, double>>> rows;
  while (std::getline(in, line)) {
    ++line_number;
    if (Trim(line).empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (!have_header) {
      if (fields.size() != 3 || fields[0] != "episode_id" || fields[1] != "step" || fields[2] != "v") {
        throw std::runtime_error("line " + std::to_string(line_number) +
                                 ": expected header 'episode_id,step,v'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 3 || fields[0].empty()) {
      throw std::runtime_error("line " + std::to_string(line_number) + ": expected 3 fields");
    }
    const double step = ParseDouble(fields[1], line_number);
    const double v = ParseDouble(fields[2], line_number);
    if (step < 0 || std::floor(step) != step) {
      throw std::runtime_error("line " + std::to_string(line_number) + ": step must be a non-negative integer");
    }
    if (!std::isfinite(v) || v < 0.0) {
      throw std::runtime_error("line " + std::to_string(line_number) + ": velocity must be finite and >= 0");
    }
    auto [it, inserted] = rows.try_emplace(fields[0]);
    if (inserted) order.push_back(fields[0]);
    it->second.emplace_back(static_cast<long>(step), v);
  }
  if (order.empty()) throw std::runtime_error("no traces in " + path.string());

  std::vector<LeaderTrace> traces;
  traces.reserve(order.size());
  for (const auto& id : order) {
    auto& samples = rows[id];
    std::stable_sort(samples.begin(), samples.end(),
                     [](const auto& l, const auto& r) { return l.first < r.first; });
    std::vector<double> velocity;
    velocity.reserve(samples.size());
    for (size_t k = 0; k < samples.size(); ++k) {
      if (samples[k].first != static_cast<long>(k)) {
        throw std::runtime_error("trace '" + id + "': steps must be contiguous from 0");
      }
      velocity.push_back(samples[k].second);
    }
    traces.push_back(MakeLeaderTrace(id, std::move(velocity), config));
  }
  return traces;
}

void SaveTraces(const std::filesystem::path& path, const std::vector<LeaderTrace>& traces) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file " + path.string());
  out << "episode_id,step,v\n";
  char buf[64];
  for (const auto& trace : traces) {
    for (size_t k = 0; k < trace.velocity.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", trace.velocity[k]);
      out << trace.episode_id << ',' << k << ',' << buf << '\n';
    }
  }
}

std::pair<std::vector<LeaderTrace>, std::vector<LeaderTrace>> SplitTraces(
    const std::vector<LeaderTrace>& traces, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("SplitTraces: ratio must be in (0, 1)");
  std::vector<size_t> index(traces.size());
  std::iota(index.begin(), index.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(index.begin(), index.end(), rng);
  const auto n_train = static_cast<size_t>(std::floor(ratio * static_cast<double>(traces.size()) + 1e-9));
  std::pair<std::vector<LeaderTrace>, std::vector<LeaderTrace>> out;
  for (size_t i = 0; i < index.size(); ++i) {
    (i < n_train ? out.first : out.second).push_back(traces[index[i]]);
  }
  return out;
}

std::vector<LeaderTrace> GenerateSyntheticTraces(int num_episodes, const PlatoonConfig& config,
                                                 uint64_t seed, const SyntheticTraceOptions& options) {
  std::vector<LeaderTrace> traces;
  if (num_episodes <= 0) return traces;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> speed(options.min_initial_speed, options.max_initial_speed);
  std::normal_distribution<double> shock(0.0, 1.0);
  const size_t length = static_cast<size_t>(config.horizon) + 2;
  const double t = config.step_interval;
  traces.reserve(static_cast<size_t>(num_episodes));
  for (int e = 0; e < num_episodes; ++e) {
    std::vector<double> velocity(length);
    velocity[0] = speed(rng);
    double accel = 0.0;
    for (size_t k = 1; k < length; ++k) {
      accel += -options.accel_reversion * accel + options.accel_volatility * shock(rng);
      accel = ClampAcceleration(accel, config);
      velocity[k] = std::max(0.0, velocity[k - 1] + t * accel);
      if (velocity[k] == 0.0) accel = 0.0;
    }
    traces.push_back(MakeLeaderTrace("syn" + std::to_string(e), std::move(velocity), config));
  }
  return traces;
}

}  // namespace platoon
