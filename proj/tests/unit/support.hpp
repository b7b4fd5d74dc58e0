#pragma once

// Shared helpers for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>

#include "ibsher/nn/mlp.hpp"

namespace ibsher::test {

inline nn::Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline std::vector<nn::Activation> activations_of(const nn::Mlp& net) {
  std::vector<nn::Activation> out;
  for (const auto& l : net.layers) out.push_back(l.activation);
  return out;
}

inline std::vector<bool> normalize_flags(const nn::Mlp& net) {
  std::vector<bool> out;
  for (const auto& l : net.layers) out.push_back(l.normalize);
  return out;
}

/// 1 to 4 layers, widths 1 to 7, each activation drawn independently.
inline nn::Mlp random_mlp(Rng& rng, bool normalize_some) {
  std::uniform_int_distribution<int> depth(1, 4), width(1, 7), act(0, 2), coin(0, 1);
  const int layers = depth(rng);
  std::vector<int> sizes{width(rng)};
  std::vector<nn::Activation> acts;
  std::vector<bool> norm;
  for (int k = 0; k < layers; ++k) {
    sizes.push_back(width(rng));
    acts.push_back(static_cast<nn::Activation>(act(rng)));
    norm.push_back(normalize_some && coin(rng) == 1);
  }
  auto net = nn::mlp_init(sizes, acts, rng(), norm);
  // Nonzero biases so every code path sees generic values.
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto& l : net.layers) l.bias = l.bias.unaryExpr([&](double) { return n(rng); });
  return net;
}

/// |a - b| / max(|a|, |b|, 1e-6); the floor keeps entries that are zero up to round-off
/// from dominating.
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

struct FdCheck {
  double max_param_rel_error = 0.0;
  double max_input_rel_error = 0.0;
};

/// Central differences (h = 1e-5) of L = sum(R .* net(x)) for a random R.
inline FdCheck finite_difference_check(const nn::Mlp& net, const nn::Matrix& x, Rng& rng) {
  const double h = 1e-5;
  const nn::Matrix r = random_matrix(rng, x.rows(), net.output_dim(), 1.0);
  const auto loss = [&](const nn::Mlp& m, const nn::Matrix& in) {
    return (nn::forward(m, in).outputs.array() * r.array()).sum();
  };
  const auto fwd = nn::forward(net, x);
  const auto g = nn::backward(net, fwd.cache, r);
  const auto analytic = nn::flatten_gradients(g.params);

  FdCheck out;
  auto params = nn::flatten_parameters(net);
  nn::Mlp probe = net;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    nn::assign_parameters(probe, params);
    const double up = loss(probe, x);
    params[i] = keep - h;
    nn::assign_parameters(probe, params);
    const double down = loss(probe, x);
    params[i] = keep;
    out.max_param_rel_error = std::max(out.max_param_rel_error, relative_error(analytic[i], (up - down) / (2 * h)));
  }
  nn::Matrix xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = xp.data()[i];
    xp.data()[i] = keep + h;
    const double up = loss(net, xp);
    xp.data()[i] = keep - h;
    const double down = loss(net, xp);
    xp.data()[i] = keep;
    out.max_input_rel_error =
        std::max(out.max_input_rel_error, relative_error(g.grad_input.data()[i], (up - down) / (2 * h)));
  }
  return out;
}

/// Exact policy for bit-flip with n = 1 (obs = [bit], goal = [target]): flip when the bit
/// differs, otherwise take the null action. Hidden units carry relu(b - g) and relu(g - b).
inline nn::Mlp one_bit_oracle_actor() {
  auto net = nn::mlp_init({2, 2, 2}, {nn::Activation::relu, nn::Activation::tanh}, 0);
  net.layers[0].weight << 1.0, -1.0, -1.0, 1.0;
  net.layers[0].bias << 0.0, 0.0;
  net.layers[1].weight << 1.0, -1.0, 1.0, -1.0;
  net.layers[1].bias << -0.5, 0.5;
  return net;
}

}  // namespace ibsher::test
