#include "ibsher/nn/optimizer.hpp"

#include <cmath>
#include <string>

namespace ibsher::nn {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

OptimizerState make_optimizer(const Mlp& net, OptimizerKind kind, double learning_rate,
                              double clip_norm) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  OptimizerState opt;
  opt.kind = kind;
  opt.learning_rate = learning_rate;
  opt.clip_norm = clip_norm;
  for (const auto& l : net.layers) {
    opt.m_weight.push_back(Matrix::Zero(l.fan_in(), l.fan_out()));
    opt.v_weight.push_back(Matrix::Zero(l.fan_in(), l.fan_out()));
    opt.m_bias.push_back(RowVector::Zero(l.fan_out()));
    opt.v_bias.push_back(RowVector::Zero(l.fan_out()));
  }
  return opt;
}

namespace {

template <typename Param>
void adam_update(Param& p, const Param& g, Param& m, Param& v, const OptimizerState& opt,
                 double bias1, double bias2) {
  m = opt.beta1 * m + (1.0 - opt.beta1) * g;
  v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
  const auto m_hat = m.array() / bias1;
  const auto v_hat = v.array() / bias2;
  p.array() -= opt.learning_rate * m_hat / (v_hat.sqrt() + opt.epsilon);
}

}  // namespace

void apply_gradients(Mlp& net, const Gradients& grads, OptimizerState& opt) {
  if (grads.weight.size() != net.layers.size() || opt.m_weight.size() != net.layers.size()) {
    throw ShapeError("gradient/optimizer state does not match the network");
  }
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    if (grads.weight[k].rows() != net.layers[k].fan_in() ||
        grads.weight[k].cols() != net.layers[k].fan_out() ||
        grads.bias[k].size() != net.layers[k].fan_out()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(k));
    }
  }
  if (!grads.all_finite()) {
    throw NumericError("non-finite gradient at optimizer step " + std::to_string(opt.step_count));
  }

  ++opt.step_count;
  if (opt.kind == OptimizerKind::sgd) {
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
      net.layers[k].weight -= opt.learning_rate * grads.weight[k];
      net.layers[k].bias -= opt.learning_rate * grads.bias[k];
    }
  } else {
    const double t = static_cast<double>(opt.step_count);
    const double bias1 = 1.0 - std::pow(opt.beta1, t);
    const double bias2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
      adam_update(net.layers[k].weight, grads.weight[k], opt.m_weight[k], opt.v_weight[k], opt,
                  bias1, bias2);
      adam_update(net.layers[k].bias, grads.bias[k], opt.m_bias[k], opt.v_bias[k], opt, bias1,
                  bias2);
    }
  }
  if (!net.all_finite()) {
    throw NumericError("parameters became non-finite at optimizer step " +
                       std::to_string(opt.step_count));
  }
}

void sync_target(Mlp& target, const Mlp& online, TargetSync mode) {
  if (!target.same_architecture(online)) throw ShapeError("target and online networks differ");
  if (mode.mode == TargetSync::Mode::hard) {
    target = online;
    return;
  }
  const double tau = mode.tau;
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("polyak coefficient must lie in [0, 1]");
  for (std::size_t k = 0; k < target.layers.size(); ++k) {
    auto& t = target.layers[k];
    const auto& o = online.layers[k];
    t.weight = (1.0 - tau) * t.weight + tau * o.weight;
    t.bias = (1.0 - tau) * t.bias + tau * o.bias;
    if (t.normalize) {
      t.running_mean = (1.0 - tau) * t.running_mean + tau * o.running_mean;
      t.running_var = (1.0 - tau) * t.running_var + tau * o.running_var;
      t.stats_initialized = t.stats_initialized || o.stats_initialized;
    }
  }
}

}  // namespace ibsher::nn
