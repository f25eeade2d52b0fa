#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace platoon {

enum class Activation { kRelu, kTanh, kLinear };

/// Layer layout of a fully connected network. `layer_sizes` lists the output
/// width of every layer, the last entry being the network output.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> layer_sizes;
  std::vector<Activation> activations;
  // Critics: index of the layer whose input gets the scalar action
  // concatenated to it. -1 for actors.
  int action_injection_layer = -1;
  // Actors: tanh output mapped affinely onto [output_min, output_max].
  bool scaled_output = false;
  double output_min = -1.0;
  double output_max = 1.0;

  int num_layers() const { return static_cast<int>(layer_sizes.size()); }
  int output_dim() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }
  /// Input width of layer `l`, including an injected action.
  int layer_input_dim(int l) const;
  void Validate() const;

  bool operator==(const MlpSpec&) const = default;
};

/// relu hidden layers, tanh output rescaled onto [u_min, u_max].
MlpSpec ActorSpec(int input_dim, const std::vector<int>& hidden, double u_min, double u_max);

/// relu hidden layers, linear scalar output; the action joins the input of
/// hidden layer `injection_layer` (1 = second hidden layer).
MlpSpec CriticSpec(int input_dim, const std::vector<int>& hidden, int injection_layer = 1);

/// Row-major weight matrices (out x in) and bias vectors, one per layer. Also
/// used for gradients and optimizer moments.
struct MlpWeights {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  static MlpWeights ZerosLike(const MlpWeights& other);
  bool SameShape(const MlpWeights& other) const;
  size_t ParameterCount() const;
  bool operator==(const MlpWeights& other) const;
};

/// FNV-1a over the raw bytes of every parameter.
uint64_t WeightHash(const MlpWeights& weights);

/// Intermediate values retained by a forward pass for Backward.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // per-layer input (with injected action)
  std::vector<Eigen::MatrixXd> pre;     // per-layer pre-activation
  Eigen::MatrixXd output;               // network output, after any scaling
};

struct MlpGradients {
  MlpWeights params;
  Eigen::RowVectorXd action;  // d output / d action, critics only
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, MlpWeights weights);

  /// Final layer ~ U[-3e-3, 3e-3]; other layers ~ U[-1/sqrt(f), 1/sqrt(f)] with
  /// f the layer fan-in (injected action included).
  static Mlp Initialize(const MlpSpec& spec, std::mt19937_64& rng);
  static Mlp Initialize(const MlpSpec& spec, uint64_t seed);
  static Mlp Zeros(const MlpSpec& spec);

  const MlpSpec& spec() const { return spec_; }
  const MlpWeights& weights() const { return weights_; }
  MlpWeights& mutable_weights() { return weights_; }

  /// Batched forward pass. `inputs` is input_dim x n; `actions` (1 x n) is
  /// required for critics and must be null for actors. Throws
  /// std::invalid_argument on dimension mismatch.
  Eigen::MatrixXd Forward(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd* actions = nullptr,
                          ForwardCache* cache = nullptr) const;

  /// Gradient of sum_n <upstream_n, output_n> with respect to all parameters
  /// and, for critics, the injected action.
  MlpGradients Backward(const ForwardCache& cache, const Eigen::MatrixXd& upstream) const;

  bool operator==(const Mlp& other) const { return spec_ == other.spec_ && weights_ == other.weights_; }

 private:
  MlpSpec spec_;
  MlpWeights weights_;
};

/// Scalar conveniences for a single observation.
double ActorForward(const Mlp& actor, const Eigen::VectorXd& observation);
double CriticForward(const Mlp& critic, const Eigen::VectorXd& observation, double action);

/// Adaptive moment estimation state for one network.
struct OptimizerState {
  MlpWeights first_moment;
  MlpWeights second_moment;
  int64_t step = 0;
  double learning_rate = 1e-3;

  static OptimizerState For(const MlpWeights& weights, double learning_rate);
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// One bias-corrected adaptive-moment descent step: weights -= lr * m_hat /
/// (sqrt(v_hat) + eps).
void OptimizerStep(MlpWeights& weights, const MlpWeights& gradients, OptimizerState& state);

/// target = eta * source + (1 - eta) * target, elementwise.
void SoftUpdate(MlpWeights& target, const MlpWeights& source, double eta);

nlohmann::json MlpToJson(const Mlp& net, uint64_t seed = 0);
Mlp MlpFromJson(const nlohmann::json& doc);
void SaveMlp(const std::filesystem::path& path, const Mlp& net, uint64_t seed = 0);
Mlp LoadMlp(const std::filesystem::path& path);

}  // namespace platoon
