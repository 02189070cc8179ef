#pragma once

// Client-side training for FedAvg, FedProx, FedNova and Scaffold.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fedsd/dataset.hpp"
#include "fedsd/error.hpp"
#include "fedsd/model.hpp"
#include "fedsd/optim.hpp"
#include "fedsd/params.hpp"
#include "fedsd/rng.hpp"

namespace fedsd {

enum class Algorithm { fedavg, fedprox, fednova, scaffold };

inline std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::fedavg: return "fedavg";
    case Algorithm::fedprox: return "fedprox";
    case Algorithm::fednova: return "fednova";
    case Algorithm::scaffold: return "scaffold";
  }
  return "unknown";
}

inline Algorithm algorithm_from_string(std::string_view s, const std::string& path = "federation.algorithm") {
  if (s == "fedavg") return Algorithm::fedavg;
  if (s == "fedprox") return Algorithm::fedprox;
  if (s == "fednova") return Algorithm::fednova;
  if (s == "scaffold") return Algorithm::scaffold;
  throw ConfigError(path, "unknown algorithm '" + std::string(s) + "'");
}

struct LocalTrainConfig {
  std::size_t iterations = 150;
  std::size_t batch_size = 64;
  Algorithm algorithm = Algorithm::fedavg;
  double mu = 0.01;  // FedProx proximal strength

  void validate(const std::string& path = "local") const {
    if (iterations == 0) throw ConfigError(path + ".iterations", "must be positive");
    if (batch_size == 0) throw ConfigError(path + ".batch_size", "must be positive");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError(path + ".mu", "must be non-negative");
  }
};

struct ControlVariates {
  ParamVector c_global;
  ParamVector c_local;
};

struct ClientUpdate {
  ParamVector params;
  std::size_t num_samples = 0;
  std::size_t local_steps = 0;
  std::optional<ParamVector> cv_delta;  // Scaffold: c_local' - c_local
  double final_loss = 0.0;              // last minibatch loss
};

/// Cycles through a dataset in minibatches, reshuffling at every epoch
/// boundary. A short tail is dropped; a dataset smaller than one batch is
/// served whole.
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t dataset_size, std::size_t batch_size, Rng& rng)
      : order_(dataset_size), batch_(std::min(batch_size, dataset_size)), rng_(rng) {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    reshuffle();
  }

  std::span<const std::size_t> next() {
    if (cursor_ + batch_ > order_.size()) reshuffle();
    std::span<const std::size_t> out(order_.data() + cursor_, batch_);
    cursor_ += batch_;
    return out;
  }

  std::size_t epochs() const noexcept { return epochs_; }

 private:
  void reshuffle() {
    rng_.shuffle(order_);
    cursor_ = 0;
    ++epochs_;
  }

  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t cursor_ = 0;
  std::size_t epochs_ = 0;
  Rng& rng_;
};

/// Classifier loss plus mu/2 * ||theta - anchor||^2, with gradient.
inline double proximal_loss_and_grad(const ModelSpec& spec, const ParamVector& params, const ParamVector& anchor,
                                     double mu, const LabeledDataset& data, std::span<const std::size_t> indices,
                                     std::span<double> grad) {
  double loss = loss_and_grad(spec, params, data, indices, grad).loss;
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double d = params[i] - anchor[i];
    sq += d * d;
    grad[i] += mu * d;
  }
  return loss + 0.5 * mu * sq;
}

/// Runs exactly `cfg.iterations` optimizer steps from `global_params`.
/// FedProx adds mu * (theta - theta_global) to every gradient; Scaffold adds
/// (c_global - c_local) and then refreshes c_local with
///   c_local' = c_local - c_global + (theta_global - theta) / (iterations * lr).
inline ClientUpdate local_train(const ModelSpec& spec, const ParamVector& global_params, const LabeledDataset& data,
                                const LocalTrainConfig& cfg, const OptimizerConfig& opt,
                                const ControlVariates* cv, Rng& rng) {
  cfg.validate();
  if (data.empty()) throw DataError("local_train: client dataset is empty");
  const bool scaffold = cfg.algorithm == Algorithm::scaffold;
  const bool prox = cfg.algorithm == Algorithm::fedprox;
  if (scaffold) {
    if (cv == nullptr) throw DataError("local_train: scaffold requires control variates");
    require_same_layout(cv->c_global, global_params, "scaffold c_global");
    require_same_layout(cv->c_local, global_params, "scaffold c_local");
  }

  ParamVector theta = global_params;
  std::vector<double> grad(theta.size());
  OptimizerState state(theta.size());
  MinibatchSampler batches(data.size(), cfg.batch_size, rng);
  double last_loss = 0.0;

  for (std::size_t step = 0; step < cfg.iterations; ++step) {
    const auto idx = batches.next();
    try {
      last_loss = loss_and_grad(spec, theta, data, idx, grad).loss;
    } catch (const DivergenceError& e) {
      throw DivergenceError(step, "local training diverged");
    }
    if (prox) {
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.mu * (theta[i] - global_params[i]);
    } else if (scaffold) {
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cv->c_global[i] - cv->c_local[i];
    }
    optimizer_step(theta.values(), grad, state, opt);
    if (!theta.all_finite()) throw DivergenceError(step, "local parameters became non-finite");
  }

  ClientUpdate up;
  up.num_samples = data.size();
  up.local_steps = cfg.iterations;
  up.final_loss = last_loss;
  if (scaffold) {
    const double scale = 1.0 / (static_cast<double>(cfg.iterations) * opt.lr);
    ParamVector delta(global_params.layout());
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double c_new = cv->c_local[i] - cv->c_global[i] + (global_params[i] - theta[i]) * scale;
      delta[i] = c_new - cv->c_local[i];
    }
    up.cv_delta = std::move(delta);
  }
  up.params = std::move(theta);
  return up;
}

}  // namespace fedsd
