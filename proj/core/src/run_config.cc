#include "platoon/run_config.h"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace platoon {
namespace {

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseDouble(const std::string& s) {
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument(s);
  return v;
}

long long ParseInt(const std::string& s) {
  size_t pos = 0;
  const long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument(s);
  return v;
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw std::invalid_argument("empty list entry");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

template <typename T>
std::string JoinList(const std::vector<T>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += FormatDouble(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

using Schema = std::map<std::string, std::map<std::string, Field>>;

template <typename Access>
Field DoubleField(Access access) {
  return {[access](const RunConfig& c) { return FormatDouble(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& v) { access(c) = ParseDouble(v); }};
}

template <typename Access>
Field IntField(Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<RunConfig&>()))>;
  return {[access](const RunConfig& c) { return std::to_string(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& v) {
            const long long parsed = ParseInt(v);
            if constexpr (std::is_unsigned_v<T>) {
              if (parsed < 0) throw std::invalid_argument("negative value");
            }
            access(c) = static_cast<T>(parsed);
          }};
}

template <typename Access>
Field DoubleListField(Access access) {
  return {[access](const RunConfig& c) { return JoinList(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& v) {
            std::vector<double> out;
            for (const auto& s : SplitList(v)) out.push_back(ParseDouble(s));
            access(c) = out;
          }};
}

template <typename Access>
Field IntListField(Access access) {
  return {[access](const RunConfig& c) { return JoinList(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& v) {
            std::vector<int> out;
            for (const auto& s : SplitList(v)) out.push_back(static_cast<int>(ParseInt(s)));
            access(c) = out;
          }};
}

void AddLearner(Schema& schema, const std::string& section, LearnerConfig RunConfig::*learner) {
  auto& s = schema[section];
  auto d = [learner](auto member) { return [learner, member](RunConfig& c) -> auto& { return (c.*learner).ddpg.*member; }; };
  s["actor_lr"] = DoubleField(d(&DdpgConfig::actor_lr));
  s["critic_lr"] = DoubleField(d(&DdpgConfig::critic_lr));
  s["batch_size"] = IntField(d(&DdpgConfig::batch_size));
  s["episodes"] = IntField(d(&DdpgConfig::episodes));
  s["soft_update"] = DoubleField(d(&DdpgConfig::soft_update));
  s["buffer_capacity"] = IntField(d(&DdpgConfig::buffer_capacity));
  s["eval_every"] = IntField(d(&DdpgConfig::eval_every));
  s["eval_episodes"] = IntField(d(&DdpgConfig::eval_episodes));
  s["noise_theta"] = DoubleField(d(&DdpgConfig::noise_theta));
  s["noise_sigma"] = DoubleField(d(&DdpgConfig::noise_sigma));
  s["hidden"] = IntListField([learner](RunConfig& c) -> auto& { return (c.*learner).hidden; });
}

const Schema& GetSchema() {
  static const Schema schema = [] {
    Schema s;
    auto p = [](auto member) { return [member](RunConfig& c) -> auto& { return c.platoon.*member; }; };
    s["platoon"]["num_vehicles"] = IntField(p(&PlatoonConfig::num_vehicles));
    s["platoon"]["step_interval"] = DoubleField(p(&PlatoonConfig::step_interval));
    s["platoon"]["horizon"] = IntField(p(&PlatoonConfig::horizon));
    s["platoon"]["tau"] = DoubleListField(p(&PlatoonConfig::tau));
    s["platoon"]["time_gap"] = DoubleListField(p(&PlatoonConfig::time_gap));
    s["platoon"]["standstill"] = DoubleListField(p(&PlatoonConfig::standstill));
    s["platoon"]["body_length"] = DoubleListField(p(&PlatoonConfig::body_length));
    s["platoon"]["accel_min"] = DoubleField(p(&PlatoonConfig::accel_min));
    s["platoon"]["accel_max"] = DoubleField(p(&PlatoonConfig::accel_max));
    s["platoon"]["input_min"] = DoubleField(p(&PlatoonConfig::input_min));
    s["platoon"]["input_max"] = DoubleField(p(&PlatoonConfig::input_max));

    auto r = [](auto member) { return [member](RunConfig& c) -> auto& { return c.reward.*member; }; };
    s["reward"]["a"] = DoubleField(r(&RewardWeights::a));
    s["reward"]["b"] = DoubleField(r(&RewardWeights::b));
    s["reward"]["c"] = DoubleField(r(&RewardWeights::c));
    s["reward"]["threshold"] = DoubleField(r(&RewardWeights::threshold));
    s["reward"]["nominal_gap_error"] = DoubleField(r(&RewardWeights::nominal_gap_error));
    s["reward"]["nominal_velocity_error"] = DoubleField(r(&RewardWeights::nominal_velocity_error));
    s["reward"]["scale"] = DoubleField(r(&RewardWeights::scale));
    s["reward"]["discount"] = DoubleField(r(&RewardWeights::discount));

    AddLearner(s, "fh", &RunConfig::fh);
    AddLearner(s, "ddpg", &RunConfig::baseline);
    s["fh"]["threshold"] = IntField([](RunConfig& c) -> auto& { return c.threshold; });
    s["fh"]["gap_error_max"] = DoubleField([](RunConfig& c) -> auto& { return c.gap_error_max; });
    s["fh"]["velocity_error_max"] = DoubleField([](RunConfig& c) -> auto& { return c.velocity_error_max; });

    auto ss = [](auto member) { return [member](RunConfig& c) -> auto& { return c.ss.*member; }; };
    s["ss"]["test_episodes"] = IntField(ss(&SsConfig::test_episodes));
    s["ss"]["phase1_episodes"] = IntField(ss(&SsConfig::phase1_episodes));
    s["ss"]["phase2_episodes"] = IntField(ss(&SsConfig::phase2_episodes));
    s["ss"]["phase1_buffer"] = IntField(ss(&SsConfig::phase1_buffer));
    s["ss"]["phase2_buffer"] = IntField(ss(&SsConfig::phase2_buffer));
    s["ss"]["box_margin"] = DoubleField(ss(&SsConfig::box_margin));

    auto dt = [](auto member) { return [member](RunConfig& c) -> auto& { return c.data.*member; }; };
    s["data"]["traces"] = {[](const RunConfig& c) { return c.data.traces; },
                           [](RunConfig& c, const std::string& v) { c.data.traces = v; }};
    s["data"]["synthetic_episodes"] = IntField(dt(&DataConfig::synthetic_episodes));
    s["data"]["synthetic_seed"] = IntField(dt(&DataConfig::synthetic_seed));
    s["data"]["train_ratio"] = DoubleField(dt(&DataConfig::train_ratio));
    s["data"]["split_seed"] = IntField(dt(&DataConfig::split_seed));

    s["run"]["test_episodes"] = IntField([](RunConfig& c) -> auto& { return c.test_episodes; });
    s["run"]["seed"] = IntField([](RunConfig& c) -> auto& { return c.seed; });
    return s;
  }();
  return schema;
}

}  // namespace

void RunConfig::Validate() const {
  platoon.Validate();
  reward.Validate();
  fh.ddpg.Validate();
  baseline.ddpg.Validate();
  ss.Validate();
  for (const auto* hidden : {&fh.hidden, &baseline.hidden}) {
    if (hidden->empty()) throw std::invalid_argument("RunConfig: at least one hidden layer required");
    for (int w : *hidden) {
      if (w < 1) throw std::invalid_argument("RunConfig: hidden widths must be positive");
    }
  }
  if (threshold < 1 || threshold >= platoon.horizon - 1) {
    throw std::invalid_argument("RunConfig: threshold must satisfy 1 <= m < K-1");
  }
  if (!(gap_error_max > 0.0 && velocity_error_max > 0.0)) {
    throw std::invalid_argument("RunConfig: sweep bounds must be positive");
  }
  if (data.synthetic_episodes < 0) throw std::invalid_argument("RunConfig: synthetic_episodes must be >= 0");
  if (!(data.train_ratio > 0.0 && data.train_ratio < 1.0)) {
    throw std::invalid_argument("RunConfig: train_ratio must lie in (0, 1)");
  }
  if (test_episodes < 1) throw std::invalid_argument("RunConfig: test_episodes must be positive");
}

RunConfig DefaultRunConfig() {
  RunConfig c;
  c.fh.hidden = {400, 300, 100};
  c.fh.ddpg.buffer_capacity = 2500;
  c.baseline.hidden = {256, 128};
  c.baseline.ddpg.buffer_capacity = 250000;
  return c;
}

RunConfig DeskRunConfig() {
  RunConfig c = DefaultRunConfig();
  for (LearnerConfig* l : {&c.fh, &c.baseline}) {
    l->hidden = {64, 64};
    l->ddpg.episodes = 500;
    l->ddpg.eval_every = 20;
    l->ddpg.eval_episodes = 10;
  }
  c.ss.phase1_episodes = 300;
  c.ss.phase2_episodes = 200;
  c.data.synthetic_episodes = 250;
  c.test_episodes = 50;
  return c;
}

std::string FormatRunConfig(const RunConfig& config) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, fields] : GetSchema()) {
    if (!first) out << '\n';
    first = false;
    out << '[' << section << "]\n";
    for (const auto& [key, field] : fields) out << key << " = " << field.get(config) << '\n';
  }
  return out.str();
}

RunConfig ParseRunConfig(const std::string& text, const RunConfig& base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  const Schema& schema = GetSchema();
  RunConfig config = base;
  for (const auto& [section, body] : tree) {
    auto sec = schema.find(section);
    if (sec == schema.end() || body.empty()) {
      throw std::runtime_error("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      auto f = sec->second.find(key);
      if (f == sec->second.end()) throw std::runtime_error("config: unknown key '" + key + "' in [" + section + "]");
      try {
        f->second.set(config, value.data());
      } catch (const std::exception&) {
        throw std::runtime_error("config: bad value '" + value.data() + "' for " + section + "." + key);
      }
    }
  }
  try {
    config.Validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  return config;
}

void SaveRunConfig(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << FormatRunConfig(config);
}

RunConfig LoadRunConfig(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return ParseRunConfig(text.str(), base);
}

RunConfig ResolveRunConfig(const std::string& name_or_path) {
  if (name_or_path == "default") return DefaultRunConfig();
  if (name_or_path == "desk") return DeskRunConfig();
  return LoadRunConfig(name_or_path);
}

}  // namespace platoon
