#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ibsher/nn/mlp.hpp"

namespace ibsher::nn {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double clip_norm = 3.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Matrix> m_weight, v_weight;
  std::vector<RowVector> m_bias, v_bias;
  std::uint64_t step_count = 0;
};

OptimizerState make_optimizer(const Mlp& net, OptimizerKind kind = OptimizerKind::adam,
                              double learning_rate = 1e-3, double clip_norm = 3.0);

/// One first-order update. Throws NumericError on non-finite gradients or parameters.
void apply_gradients(Mlp& net, const Gradients& grads, OptimizerState& opt);

struct TargetSync {
  enum class Mode { hard, polyak };
  Mode mode = Mode::hard;
  double tau = 0.05;  // polyak only

  static TargetSync hard() { return {Mode::hard, 1.0}; }
  static TargetSync polyak(double tau) { return {Mode::polyak, tau}; }
};

/// hard: exact copy (weights and standardization statistics);
/// polyak: target <- (1 - tau) * target + tau * online.
void sync_target(Mlp& target, const Mlp& online, TargetSync mode);

}  // namespace ibsher::nn
