#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsd/error.hpp"

namespace fedsd {

enum class OptimizerKind { sgd, adamw };

inline std::string_view to_string(OptimizerKind k) noexcept { return k == OptimizerKind::sgd ? "sgd" : "adamw"; }

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adamw;
  double lr = 5e-4;
  double weight_decay = 3e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate(const std::string& path = "optimizer") const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError(path + ".lr", "must be positive");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
      throw ConfigError(path + ".weight_decay", "must be non-negative");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError(path + ".beta1", "must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError(path + ".beta2", "must lie in [0, 1)");
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError(path + ".eps", "must be non-negative");
  }
};

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit OptimizerState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Adam moments with bias correction and decoupled weight decay:
///   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
inline void adamw_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                       const OptimizerConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw DataError("adamw_step: size mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= cfg.lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * params[i]);
  }
}

/// theta -= lr * (g + weight_decay * theta)
inline void sgd_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                     const OptimizerConfig& cfg) {
  if (grads.size() != params.size()) throw DataError("sgd_step: size mismatch");
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i)
    params[i] -= cfg.lr * (grads[i] + cfg.weight_decay * params[i]);
}

inline void optimizer_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                           const OptimizerConfig& cfg) {
  cfg.kind == OptimizerKind::adamw ? adamw_step(params, grads, state, cfg) : sgd_step(params, grads, state, cfg);
}

}  // namespace fedsd
