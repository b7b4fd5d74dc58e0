#include "ibsher/nn/mlp.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace ibsher::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "linear";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::vector<int> Mlp::layer_sizes() const {
  std::vector<int> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(static_cast<int>(layers.front().fan_in()));
  for (const auto& l : layers) sizes.push_back(static_cast<int>(l.fan_out()));
  return sizes;
}

int Mlp::input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().fan_in()); }
int Mlp::output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().fan_out()); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    if (l.normalize && (!l.running_mean.allFinite() || !l.running_var.allFinite())) return false;
  }
  return true;
}

bool Mlp::same_architecture(const Mlp& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.fan_in() != b.fan_in() || a.fan_out() != b.fan_out() || a.activation != b.activation ||
        a.normalize != b.normalize) {
      return false;
    }
  }
  return true;
}

Mlp mlp_init(const std::vector<int>& layer_sizes, const std::vector<Activation>& activations,
             std::uint64_t seed, const std::vector<bool>& normalize) {
  if (layer_sizes.size() < 2) {
    throw ConfigError("an MLP needs at least an input and an output size");
  }
  const std::size_t n_layers = layer_sizes.size() - 1;
  if (activations.size() != n_layers) {
    throw ConfigError("expected " + std::to_string(n_layers) + " activations, got " +
                      std::to_string(activations.size()));
  }
  if (!normalize.empty() && normalize.size() != n_layers) {
    throw ConfigError("normalization flags must match the number of layers");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw ConfigError("layer sizes must be positive");
  }

  Rng rng(seed);
  Mlp net;
  net.layers.reserve(n_layers);
  for (std::size_t k = 0; k < n_layers; ++k) {
    const int fan_in = layer_sizes[k];
    const int fan_out = layer_sizes[k + 1];
    const double bound = activations[k] == Activation::relu ? std::sqrt(6.0 / fan_in)
                                                            : std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer;
    layer.weight.resize(fan_in, fan_out);
    // Fill row-major so the draw order is independent of Eigen's storage order.
    for (int r = 0; r < fan_in; ++r) {
      for (int c = 0; c < fan_out; ++c) layer.weight(r, c) = dist(rng);
    }
    layer.bias = RowVector::Zero(fan_out);
    layer.activation = activations[k];
    layer.normalize = normalize.empty() ? false : normalize[k];
    layer.running_mean = RowVector::Zero(fan_in);
    layer.running_var = RowVector::Ones(fan_in);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

namespace {

Matrix standardize(const Layer& layer, const Matrix& x) {
  if (!layer.normalize) return x;
  const RowVector inv_std = (layer.running_var.array() + kNormEpsilon).rsqrt().matrix();
  return ((x.rowwise() - layer.running_mean).array().rowwise() * inv_std.array()).matrix();
}

Matrix activate(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::linear: return z;
  }
  return z;
}

// d act / d z expressed through z and the activation output.
Matrix activation_derivative(Activation a, const Matrix& z, const Matrix& y) {
  switch (a) {
    case Activation::relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::tanh: return (1.0 - y.array().square()).matrix();
    case Activation::linear: return Matrix::Ones(z.rows(), z.cols());
  }
  return Matrix::Ones(z.rows(), z.cols());
}

void check_input(const Mlp& net, const Matrix& batch) {
  if (net.layers.empty()) throw ShapeError("forward through an empty network");
  if (batch.cols() != net.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                     std::to_string(net.input_dim()));
  }
}

}  // namespace

ForwardResult forward(const Mlp& net, const Matrix& batch) {
  check_input(net, batch);
  ForwardResult result;
  auto& cache = result.cache;
  cache.layer_sizes = net.layer_sizes();
  cache.inputs.reserve(net.layers.size());
  cache.pre_activations.reserve(net.layers.size());
  cache.outputs.reserve(net.layers.size());

  Matrix x = batch;
  for (const auto& layer : net.layers) {
    Matrix xin = standardize(layer, x);
    Matrix z = (xin * layer.weight).rowwise() + layer.bias;
    Matrix y = activate(layer.activation, z);
    cache.inputs.push_back(std::move(xin));
    cache.pre_activations.push_back(std::move(z));
    cache.outputs.push_back(y);
    x = std::move(y);
  }
  result.outputs = std::move(x);
  return result;
}

Matrix predict(const Mlp& net, const Matrix& batch) {
  check_input(net, batch);
  Matrix x = batch;
  for (const auto& layer : net.layers) {
    Matrix z = (standardize(layer, x) * layer.weight).rowwise() + layer.bias;
    x = activate(layer.activation, z);
  }
  return x;
}

double Gradients::global_norm() const {
  double s = 0.0;
  for (const auto& w : weight) s += w.squaredNorm();
  for (const auto& b : bias) s += b.squaredNorm();
  return std::sqrt(s);
}

bool Gradients::all_finite() const {
  for (const auto& w : weight)
    if (!w.allFinite()) return false;
  for (const auto& b : bias)
    if (!b.allFinite()) return false;
  return true;
}

void Gradients::scale(double factor) {
  for (auto& w : weight) w *= factor;
  for (auto& b : bias) b *= factor;
}

Gradients zero_gradients(const Mlp& net) {
  Gradients g;
  for (const auto& l : net.layers) {
    g.weight.push_back(Matrix::Zero(l.fan_in(), l.fan_out()));
    g.bias.push_back(RowVector::Zero(l.fan_out()));
  }
  return g;
}

BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& grad_out) {
  const std::size_t n = net.layers.size();
  if (cache.layer_sizes != net.layer_sizes() || cache.inputs.size() != n) {
    throw ShapeError("activation record does not belong to this network");
  }
  const Eigen::Index rows = cache.inputs.front().rows();
  if (grad_out.rows() != rows || grad_out.cols() != net.output_dim()) {
    throw ShapeError("output gradient shape does not match the cached forward pass");
  }

  BackwardResult result;
  result.params.weight.resize(n);
  result.params.bias.resize(n);

  Matrix upstream = grad_out;
  for (std::size_t k = n; k-- > 0;) {
    const Layer& layer = net.layers[k];
    const Matrix dz = upstream.cwiseProduct(
        activation_derivative(layer.activation, cache.pre_activations[k], cache.outputs[k]));
    result.params.weight[k] = cache.inputs[k].transpose() * dz;
    result.params.bias[k] = dz.colwise().sum();
    Matrix dx = dz * layer.weight.transpose();
    if (layer.normalize) {
      const RowVector inv_std = (layer.running_var.array() + kNormEpsilon).rsqrt().matrix();
      dx = (dx.array().rowwise() * inv_std.array()).matrix();
    }
    upstream = std::move(dx);
  }
  result.grad_input = std::move(upstream);
  return result;
}

Gradients clip_gradients(Gradients grads, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  const double norm = grads.global_norm();
  // A few ulps of slack so clipping an already clipped set is a no-op.
  if (norm > clip_norm * (1.0 + 8 * std::numeric_limits<double>::epsilon())) grads.scale(clip_norm / norm);
  return grads;
}

void update_normalization(Mlp& net, const Matrix& batch, double momentum) {
  check_input(net, batch);
  if (batch.rows() == 0) return;
  Matrix x = batch;
  for (auto& layer : net.layers) {
    if (layer.normalize) {
      const RowVector mean = x.colwise().mean();
      const RowVector var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
      if (!layer.stats_initialized) {
        layer.running_mean = mean;
        layer.running_var = var;
        layer.stats_initialized = true;
      } else {
        layer.running_mean = (1.0 - momentum) * layer.running_mean + momentum * mean;
        layer.running_var = (1.0 - momentum) * layer.running_var + momentum * var;
      }
    }
    Matrix z = (standardize(layer, x) * layer.weight).rowwise() + layer.bias;
    x = activate(layer.activation, z);
  }
}

std::vector<double> flatten_parameters(const Mlp& net) {
  std::vector<double> flat;
  flat.reserve(net.parameter_count());
  for (const auto& l : net.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
    for (Eigen::Index c = 0; c < l.bias.size(); ++c) flat.push_back(l.bias(c));
  }
  return flat;
}

void assign_parameters(Mlp& net, const std::vector<double>& flat) {
  if (flat.size() != net.parameter_count()) throw ShapeError("flat parameter vector has wrong size");
  std::size_t i = 0;
  for (auto& l : net.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[i++];
    for (Eigen::Index c = 0; c < l.bias.size(); ++c) l.bias(c) = flat[i++];
  }
}

std::vector<double> flatten_gradients(const Gradients& grads) {
  std::vector<double> flat;
  for (std::size_t k = 0; k < grads.weight.size(); ++k) {
    const auto& w = grads.weight[k];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    for (Eigen::Index c = 0; c < grads.bias[k].size(); ++c) flat.push_back(grads.bias[k](c));
  }
  return flat;
}

}  // namespace ibsher::nn
