#include "platoon/nn.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace platoon {
namespace {

constexpr int kFormatVersion = 1;
constexpr double kFinalLayerInitRange = 3e-3;

const char* ActivationName(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kLinear: return "linear";
  }
  return "linear";
}

Activation ActivationFromName(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "linear") return Activation::kLinear;
  throw std::runtime_error("unknown activation '" + name + "'");
}

void Activate(Activation a, const Eigen::MatrixXd& pre, Eigen::MatrixXd& out) {
  switch (a) {
    case Activation::kRelu: out = pre.cwiseMax(0.0); break;
    case Activation::kTanh: out = pre.array().tanh().matrix(); break;
    case Activation::kLinear: out = pre; break;
  }
}

// Multiplies `grad` in place by the activation derivative at `pre`.
void ActivationBackward(Activation a, const Eigen::MatrixXd& pre, Eigen::MatrixXd& grad) {
  switch (a) {
    case Activation::kRelu: grad = (pre.array() > 0.0).select(grad, 0.0); break;
    case Activation::kTanh: {
      const Eigen::ArrayXXd t = pre.array().tanh();
      grad = (grad.array() * (1.0 - t * t)).matrix();
      break;
    }
    case Activation::kLinear: break;
  }
}

uint64_t FnvMix(uint64_t hash, const double* data, size_t count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (size_t i = 0; i < count * sizeof(double); ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

int MlpSpec::layer_input_dim(int l) const {
  const int base = l == 0 ? input_dim : layer_sizes[static_cast<size_t>(l - 1)];
  return base + (l == action_injection_layer ? 1 : 0);
}

void MlpSpec::Validate() const {
  if (input_dim <= 0) throw std::invalid_argument("MlpSpec: input_dim must be positive");
  if (layer_sizes.empty()) throw std::invalid_argument("MlpSpec: no layers");
  if (activations.size() != layer_sizes.size()) {
    throw std::invalid_argument("MlpSpec: one activation per layer required");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("MlpSpec: layer sizes must be positive");
  }
  if (action_injection_layer >= num_layers()) {
    throw std::invalid_argument("MlpSpec: action injection layer out of range");
  }
  if (scaled_output && (activations.back() != Activation::kTanh || !(output_min < output_max))) {
    throw std::invalid_argument("MlpSpec: scaled output needs a tanh output and min < max");
  }
}

MlpSpec ActorSpec(int input_dim, const std::vector<int>& hidden, double u_min, double u_max) {
  MlpSpec spec;
  spec.input_dim = input_dim;
  spec.layer_sizes = hidden;
  spec.layer_sizes.push_back(1);
  spec.activations.assign(hidden.size(), Activation::kRelu);
  spec.activations.push_back(Activation::kTanh);
  spec.scaled_output = true;
  spec.output_min = u_min;
  spec.output_max = u_max;
  return spec;
}

MlpSpec CriticSpec(int input_dim, const std::vector<int>& hidden, int injection_layer) {
  MlpSpec spec;
  spec.input_dim = input_dim;
  spec.layer_sizes = hidden;
  spec.layer_sizes.push_back(1);
  spec.activations.assign(hidden.size(), Activation::kRelu);
  spec.activations.push_back(Activation::kLinear);
  spec.action_injection_layer = std::min(injection_layer, static_cast<int>(hidden.size()));
  return spec;
}

MlpWeights MlpWeights::ZerosLike(const MlpWeights& other) {
  MlpWeights z;
  for (const auto& w : other.w) z.w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : other.b) z.b.push_back(Eigen::VectorXd::Zero(b.size()));
  return z;
}

bool MlpWeights::SameShape(const MlpWeights& other) const {
  if (w.size() != other.w.size() || b.size() != other.b.size()) return false;
  for (size_t l = 0; l < w.size(); ++l) {
    if (w[l].rows() != other.w[l].rows() || w[l].cols() != other.w[l].cols()) return false;
  }
  for (size_t l = 0; l < b.size(); ++l) {
    if (b[l].size() != other.b[l].size()) return false;
  }
  return true;
}

size_t MlpWeights::ParameterCount() const {
  size_t n = 0;
  for (const auto& m : w) n += static_cast<size_t>(m.size());
  for (const auto& v : b) n += static_cast<size_t>(v.size());
  return n;
}

bool MlpWeights::operator==(const MlpWeights& other) const {
  if (!SameShape(other)) return false;
  for (size_t l = 0; l < w.size(); ++l) {
    if (w[l] != other.w[l] || b[l] != other.b[l]) return false;
  }
  return true;
}

uint64_t WeightHash(const MlpWeights& weights) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (size_t l = 0; l < weights.w.size(); ++l) {
    hash = FnvMix(hash, weights.w[l].data(), static_cast<size_t>(weights.w[l].size()));
    hash = FnvMix(hash, weights.b[l].data(), static_cast<size_t>(weights.b[l].size()));
  }
  return hash;
}

Mlp::Mlp(MlpSpec spec, MlpWeights weights) : spec_(std::move(spec)), weights_(std::move(weights)) {
  spec_.Validate();
  if (weights_.w.size() != spec_.layer_sizes.size() || weights_.b.size() != spec_.layer_sizes.size()) {
    throw std::invalid_argument("Mlp: weight layer count does not match spec");
  }
  for (int l = 0; l < spec_.num_layers(); ++l) {
    const auto& w = weights_.w[static_cast<size_t>(l)];
    if (w.rows() != spec_.layer_sizes[static_cast<size_t>(l)] || w.cols() != spec_.layer_input_dim(l) ||
        weights_.b[static_cast<size_t>(l)].size() != w.rows()) {
      throw std::invalid_argument("Mlp: weight shape does not match spec at layer " + std::to_string(l));
    }
  }
}

Mlp Mlp::Initialize(const MlpSpec& spec, std::mt19937_64& rng) {
  spec.Validate();
  MlpWeights weights;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int fan_in = spec.layer_input_dim(l);
    const int fan_out = spec.layer_sizes[static_cast<size_t>(l)];
    const double range = l + 1 == spec.num_layers() ? kFinalLayerInitRange : 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-range, range);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
    Eigen::VectorXd b(fan_out);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = dist(rng);
    weights.w.push_back(std::move(w));
    weights.b.push_back(std::move(b));
  }
  return Mlp(spec, std::move(weights));
}

Mlp Mlp::Initialize(const MlpSpec& spec, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return Initialize(spec, rng);
}

Mlp Mlp::Zeros(const MlpSpec& spec) {
  spec.Validate();
  MlpWeights weights;
  for (int l = 0; l < spec.num_layers(); ++l) {
    weights.w.push_back(Eigen::MatrixXd::Zero(spec.layer_sizes[static_cast<size_t>(l)], spec.layer_input_dim(l)));
    weights.b.push_back(Eigen::VectorXd::Zero(spec.layer_sizes[static_cast<size_t>(l)]));
  }
  return Mlp(spec, std::move(weights));
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd* actions,
                             ForwardCache* cache) const {
  if (inputs.rows() != spec_.input_dim) {
    throw std::invalid_argument("Mlp::Forward: expected input dimension " + std::to_string(spec_.input_dim) +
                                ", got " + std::to_string(inputs.rows()));
  }
  const bool is_critic = spec_.action_injection_layer >= 0;
  if (is_critic != (actions != nullptr)) {
    throw std::invalid_argument(is_critic ? "Mlp::Forward: critic requires an action"
                                          : "Mlp::Forward: actor does not take an action");
  }
  if (actions != nullptr && actions->size() != inputs.cols()) {
    throw std::invalid_argument("Mlp::Forward: action batch size mismatch");
  }
  const int n_layers = spec_.num_layers();
  if (cache != nullptr) {
    cache->inputs.resize(static_cast<size_t>(n_layers));
    cache->pre.resize(static_cast<size_t>(n_layers));
  }
  Eigen::MatrixXd x = inputs;
  Eigen::MatrixXd pre;
  for (int l = 0; l < n_layers; ++l) {
    const auto li = static_cast<size_t>(l);
    if (l == spec_.action_injection_layer) {
      Eigen::MatrixXd joined(x.rows() + 1, x.cols());
      joined.topRows(x.rows()) = x;
      joined.bottomRows(1) = *actions;
      x = std::move(joined);
    }
    pre.noalias() = weights_.w[li] * x;
    pre.colwise() += weights_.b[li];
    if (cache != nullptr) {
      cache->inputs[li] = x;
      cache->pre[li] = pre;
    }
    Activate(spec_.activations[li], pre, x);
  }
  if (spec_.scaled_output) {
    const double half_span = 0.5 * (spec_.output_max - spec_.output_min);
    x = ((x.array() + 1.0) * half_span + spec_.output_min)
            .cwiseMax(spec_.output_min)
            .cwiseMin(spec_.output_max)
            .matrix();
  }
  if (cache != nullptr) cache->output = x;
  return x;
}

MlpGradients Mlp::Backward(const ForwardCache& cache, const Eigen::MatrixXd& upstream) const {
  const int n_layers = spec_.num_layers();
  if (static_cast<int>(cache.pre.size()) != n_layers) {
    throw std::invalid_argument("Mlp::Backward: forward cache missing");
  }
  MlpGradients grads;
  grads.params = MlpWeights::ZerosLike(weights_);
  Eigen::MatrixXd delta = upstream;
  if (spec_.scaled_output) delta *= 0.5 * (spec_.output_max - spec_.output_min);
  for (int l = n_layers - 1; l >= 0; --l) {
    const auto li = static_cast<size_t>(l);
    ActivationBackward(spec_.activations[li], cache.pre[li], delta);
    grads.params.w[li].noalias() = delta * cache.inputs[li].transpose();
    grads.params.b[li] = delta.rowwise().sum();
    Eigen::MatrixXd below = weights_.w[li].transpose() * delta;
    if (l == spec_.action_injection_layer) {
      grads.action = below.bottomRows(1);
      below.conservativeResize(below.rows() - 1, Eigen::NoChange);
    }
    delta = std::move(below);
  }
  return grads;
}

double ActorForward(const Mlp& actor, const Eigen::VectorXd& observation) {
  return actor.Forward(observation)(0, 0);
}

double CriticForward(const Mlp& critic, const Eigen::VectorXd& observation, double action) {
  Eigen::RowVectorXd a(1);
  a(0) = action;
  return critic.Forward(observation, &a)(0, 0);
}

OptimizerState OptimizerState::For(const MlpWeights& weights, double learning_rate) {
  OptimizerState s;
  s.first_moment = MlpWeights::ZerosLike(weights);
  s.second_moment = MlpWeights::ZerosLike(weights);
  s.learning_rate = learning_rate;
  return s;
}

void OptimizerStep(MlpWeights& weights, const MlpWeights& gradients, OptimizerState& state) {
  if (!weights.SameShape(gradients) || !weights.SameShape(state.first_moment)) {
    throw std::invalid_argument("OptimizerStep: shape mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  const double lr = state.learning_rate;
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
    v = (kAdamBeta2 * v.array() + (1.0 - kAdamBeta2) * grad.array().square()).matrix();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEpsilon);
  };
  for (size_t l = 0; l < weights.w.size(); ++l) {
    update(weights.w[l], gradients.w[l], state.first_moment.w[l], state.second_moment.w[l]);
    update(weights.b[l], gradients.b[l], state.first_moment.b[l], state.second_moment.b[l]);
  }
}

void SoftUpdate(MlpWeights& target, const MlpWeights& source, double eta) {
  if (!target.SameShape(source)) throw std::invalid_argument("SoftUpdate: shape mismatch");
  for (size_t l = 0; l < target.w.size(); ++l) {
    target.w[l] = eta * source.w[l] + (1.0 - eta) * target.w[l];
    target.b[l] = eta * source.b[l] + (1.0 - eta) * target.b[l];
  }
}

nlohmann::json MlpToJson(const Mlp& net, uint64_t seed) {
  using nlohmann::json;
  const MlpSpec& spec = net.spec();
  json activations = json::array();
  for (auto a : spec.activations) activations.push_back(ActivationName(a));
  json doc;
  doc["version"] = kFormatVersion;
  doc["seed"] = seed;
  doc["spec"] = {{"input_dim", spec.input_dim},
                 {"layer_sizes", spec.layer_sizes},
                 {"activations", activations},
                 {"action_injection_layer", spec.action_injection_layer},
                 {"scaled_output", spec.scaled_output},
                 {"output_min", spec.output_min},
                 {"output_max", spec.output_max}};
  json layers = json::array();
  for (size_t l = 0; l < net.weights().w.size(); ++l) {
    const auto& w = net.weights().w[l];
    std::vector<double> row_major;
    row_major.reserve(static_cast<size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) row_major.push_back(w(r, c));
    }
    const auto& b = net.weights().b[l];
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"weights", row_major},
                      {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  doc["layers"] = layers;
  return doc;
}

Mlp MlpFromJson(const nlohmann::json& doc) {
  if (!doc.contains("version")) throw std::runtime_error("network document: missing version");
  if (doc.at("version").get<int>() != kFormatVersion) {
    throw std::runtime_error("network document: unsupported version");
  }
  const auto& js = doc.at("spec");
  MlpSpec spec;
  spec.input_dim = js.at("input_dim").get<int>();
  spec.layer_sizes = js.at("layer_sizes").get<std::vector<int>>();
  for (const auto& a : js.at("activations")) spec.activations.push_back(ActivationFromName(a.get<std::string>()));
  spec.action_injection_layer = js.at("action_injection_layer").get<int>();
  spec.scaled_output = js.at("scaled_output").get<bool>();
  spec.output_min = js.at("output_min").get<double>();
  spec.output_max = js.at("output_max").get<double>();
  MlpWeights weights;
  for (const auto& layer : doc.at("layers")) {
    const auto rows = layer.at("rows").get<Eigen::Index>();
    const auto cols = layer.at("cols").get<Eigen::Index>();
    const auto values = layer.at("weights").get<std::vector<double>>();
    const auto bias = layer.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != rows * cols || static_cast<Eigen::Index>(bias.size()) != rows) {
      throw std::runtime_error("network document: layer size mismatch");
    }
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = values[static_cast<size_t>(r * cols + c)];
    }
    weights.w.push_back(std::move(w));
    weights.b.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), rows));
  }
  return Mlp(std::move(spec), std::move(weights));
}

void SaveMlp(const std::filesystem::path& path, const Mlp& net, uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << MlpToJson(net, seed).dump() << '\n';
}

Mlp LoadMlp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return MlpFromJson(nlohmann::json::parse(in));
}

}  // namespace platoon
