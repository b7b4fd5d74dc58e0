#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ibsher/common.hpp"

namespace ibsher::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

enum class Activation { relu, tanh, linear };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// One fully-connected layer. Inputs are batched row-wise: y = act(norm(x) * weight + bias).
///
/// When `normalize` is set the layer input is standardized per feature with running
/// statistics; the statistics are part of the model state and are treated as constants
/// by forward/backward, so train and evaluation use the same affine map.
struct Layer {
  Matrix weight;  // fan_in x fan_out
  RowVector bias;  // 1 x fan_out
  Activation activation = Activation::linear;
  bool normalize = false;
  RowVector running_mean;  // 1 x fan_in, only meaningful when normalize
  RowVector running_var;   // 1 x fan_in
  bool stats_initialized = false;

  [[nodiscard]] Eigen::Index fan_in() const { return weight.rows(); }
  [[nodiscard]] Eigen::Index fan_out() const { return weight.cols(); }
};

/// Feed-forward network; houses the actor, critic and their target copies.
struct Mlp {
  std::vector<Layer> layers;

  [[nodiscard]] std::vector<int> layer_sizes() const;
  [[nodiscard]] int input_dim() const;
  [[nodiscard]] int output_dim() const;
  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] bool same_architecture(const Mlp& other) const;
};

inline constexpr double kNormEpsilon = 1e-6;

/// Builds a network with fan-in scaled uniform weights (He-style bound for relu layers)
/// and zero biases. Deterministic per seed.
Mlp mlp_init(const std::vector<int>& layer_sizes, const std::vector<Activation>& activations,
             std::uint64_t seed, const std::vector<bool>& normalize = {});

/// Everything backward needs from the matching forward call.
struct ForwardCache {
  std::vector<Matrix> inputs;       // per layer, after standardization
  std::vector<Matrix> pre_activations;
  std::vector<Matrix> outputs;      // per layer, after activation
  std::vector<int> layer_sizes;     // architecture the cache was recorded against
};

struct ForwardResult {
  Matrix outputs;
  ForwardCache cache;
};

/// Pure forward pass: `batch` is rows x input_dim.
ForwardResult forward(const Mlp& net, const Matrix& batch);

/// Forward pass without keeping the activation record.
Matrix predict(const Mlp& net, const Matrix& batch);

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<RowVector> bias;

  [[nodiscard]] double global_norm() const;
  [[nodiscard]] bool all_finite() const;
  void scale(double factor);
};

Gradients zero_gradients(const Mlp& net);

struct BackwardResult {
  Gradients params;
  Matrix grad_input;
};

/// Exact reverse-mode pass through the graph recorded in `cache`.
BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& grad_out);

/// Rescales all gradients by clip_norm / norm when the global L2 norm exceeds clip_norm.
Gradients clip_gradients(Gradients grads, double clip_norm);

/// Updates the running standardization statistics of every normalized layer from `batch`
/// as an exponential moving average (the first batch initializes them).
void update_normalization(Mlp& net, const Matrix& batch, double momentum);

/// Flattened view of parameters in layer order: weights (row-major) then biases.
std::vector<double> flatten_parameters(const Mlp& net);
void assign_parameters(Mlp& net, const std::vector<double>& flat);
std::vector<double> flatten_gradients(const Gradients& grads);

}  // namespace ibsher::nn
