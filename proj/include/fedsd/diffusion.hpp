#pragma once

// Toy class-conditional denoising diffusion model for low-dimensional data.
//
// Forward process: x_t = sqrt(1 - beta_t) x_{t-1} + sqrt(beta_t) eps, with the
// closed form x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps, abar_t = prod_s (1 - beta_s).
// The noise predictor eps_theta(x_t, t, y) is a dense network fed
// [x_t, sinusoidal(t), class_embedding[y]] and trained on
// ||eps - eps_theta||^2. Sampling is DDPM ancestral sampling.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsd/dataset.hpp"
#include "fedsd/error.hpp"
#include "fedsd/generator.hpp"
#include "fedsd/mlp.hpp"
#include "fedsd/optim.hpp"
#include "fedsd/parallel.hpp"
#include "fedsd/params.hpp"
#include "fedsd/rng.hpp"

namespace fedsd {

class BetaSchedule {
 public:
  explicit BetaSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty()) throw ConfigError("ddpm.schedule", "schedule needs at least one timestep");
    for (std::size_t i = 0; i < betas_.size(); ++i)
      if (!(betas_[i] > 0.0 && betas_[i] < 1.0))
        throw ConfigError("ddpm.schedule", "beta_" + std::to_string(i + 1) + " must lie in (0, 1)");
    alpha_bar_.resize(betas_.size());
    double prod = 1.0;
    for (std::size_t i = 0; i < betas_.size(); ++i) {
      prod *= 1.0 - betas_[i];
      alpha_bar_[i] = prod;
    }
  }

  /// T evenly spaced betas from `first` to `last` inclusive.
  static BetaSchedule linear(std::size_t steps, double first = 1e-4, double last = 0.02) {
    if (steps == 0) throw ConfigError("ddpm.timesteps", "must be at least 1");
    std::vector<double> b(steps);
    for (std::size_t i = 0; i < steps; ++i)
      b[i] = steps == 1 ? first
                        : first + (last - first) * static_cast<double>(i) / static_cast<double>(steps - 1);
    return BetaSchedule(std::move(b));
  }

  std::size_t steps() const noexcept { return betas_.size(); }
  /// 1-based accessors.
  double beta(std::size_t t) const { return betas_.at(check(t) - 1); }
  double alpha_bar(std::size_t t) const { return alpha_bar_.at(check(t) - 1); }
  const std::vector<double>& betas() const noexcept { return betas_; }

 private:
  std::size_t check(std::size_t t) const {
    if (t < 1 || t > betas_.size())
      throw DataError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(betas_.size()) + "]");
    return t;
  }

  std::vector<double> betas_;
  std::vector<double> alpha_bar_;
};

/// One forward-noising step: sqrt(1 - beta) x_prev + sqrt(beta) noise.
inline std::vector<double> forward_diffuse_step(std::span<const double> x_prev, double beta,
                                                std::span<const double> noise) {
  if (!(beta > 0.0 && beta < 1.0)) throw DataError("forward_diffuse_step: beta must lie in (0, 1)");
  if (noise.size() != x_prev.size()) throw DataError("forward_diffuse_step: dimension mismatch");
  const double a = std::sqrt(1.0 - beta), s = std::sqrt(beta);
  std::vector<double> out(x_prev.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x_prev[i] + s * noise[i];
  return out;
}

/// x_t sampled directly from x_0: sqrt(abar_t) x0 + sqrt(1 - abar_t) noise.
inline std::vector<double> forward_diffuse_closed(std::span<const double> x0, std::size_t t,
                                                  const BetaSchedule& schedule, std::span<const double> noise) {
  if (noise.size() != x0.size()) throw DataError("forward_diffuse_closed: dimension mismatch");
  const double ab = schedule.alpha_bar(t);
  const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + s * noise[i];
  return out;
}

/// Sinusoidal embedding of a timestep: [sin(t w_0), cos(t w_0), sin(t w_1), ...]
/// with w_i = 10000^(-2i/dim).
inline void timestep_embedding(std::size_t t, std::span<double> out) {
  const std::size_t half = out.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double w = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(out.size()));
    out[2 * i] = std::sin(static_cast<double>(t) * w);
    out[2 * i + 1] = std::cos(static_cast<double>(t) * w);
  }
  if (out.size() % 2 == 1) out.back() = static_cast<double>(t) / 1000.0;
}

struct DdpmSpec {
  std::size_t dim = 2;
  std::size_t num_classes = 2;
  std::size_t time_embed_dim = 16;
  std::size_t class_embed_dim = 8;
  std::vector<std::size_t> hidden = {64, 64};
  Activation activation = Activation::silu;

  MlpShape net_shape() const {
    MlpShape s;
    s.activation = activation;
    s.sizes.push_back(dim + time_embed_dim + class_embed_dim);
    s.sizes.insert(s.sizes.end(), hidden.begin(), hidden.end());
    s.sizes.push_back(dim);
    return s;
  }

  std::size_t embedding_params() const noexcept { return num_classes * class_embed_dim; }

  ParamLayout layout() const {
    ParamLayout l{{"class_embedding", num_classes, class_embed_dim}};
    const auto net = net_shape().layout("net.");
    l.insert(l.end(), net.begin(), net.end());
    return l;
  }

  void validate() const {
    if (dim == 0) throw ConfigError("ddpm.dim", "must be positive");
    if (num_classes == 0) throw ConfigError("ddpm.num_classes", "must be positive");
  }
};

/// Noise-prediction network. Parameters: class embedding table
/// (num_classes × class_embed_dim) followed by the dense network.
class DdpmModel {
 public:
  DdpmModel() = default;
  explicit DdpmModel(DdpmSpec spec) : spec_(std::move(spec)), params_(spec_.layout()) { spec_.validate(); }
  DdpmModel(DdpmSpec spec, ParamVector params) : spec_(std::move(spec)), params_(std::move(params)) {
    spec_.validate();
    if (params_.layout() != spec_.layout()) throw DataError("DdpmModel: parameter layout does not match spec");
  }

  static DdpmModel initialized(DdpmSpec spec, Rng& rng) {
    DdpmModel m(std::move(spec));
    auto p = m.params_.values();
    const std::size_t emb = m.spec_.embedding_params();
    for (std::size_t i = 0; i < emb; ++i) p[i] = rng.normal();
    mlp_init(m.spec_.net_shape(), p.subspan(emb), rng);
    return m;
  }

  const DdpmSpec& spec() const noexcept { return spec_; }
  const ParamVector& params() const noexcept { return params_; }
  ParamVector& params() noexcept { return params_; }

  /// Predicted noise for x_t at timestep t (1-based) under class `label`.
  /// `cache` receives the activations needed by backward().
  std::span<const double> predict(std::span<const double> x_t, std::size_t t, int label, MlpCache& cache) const {
    if (x_t.size() != spec_.dim) throw DataError("ddpm: sample dimension mismatch");
    check_label(label);
    std::vector<double> in(spec_.net_shape().input_dim());
    std::copy(x_t.begin(), x_t.end(), in.begin());
    timestep_embedding(t, std::span<double>(in).subspan(spec_.dim, spec_.time_embed_dim));
    const auto emb = class_row(label);
    std::copy(emb.begin(), emb.end(), in.begin() + static_cast<std::ptrdiff_t>(spec_.dim + spec_.time_embed_dim));
    return mlp_forward(spec_.net_shape(), net_params(), in, cache);
  }

  std::vector<double> predict(std::span<const double> x_t, std::size_t t, int label) const {
    MlpCache cache;
    const auto out = predict(x_t, t, label, cache);
    return {out.begin(), out.end()};
  }

  /// Accumulates the gradient of a loss with dLoss/doutput = `grad_output`.
  void backward(const MlpCache& cache, int label, std::span<const double> grad_output, std::span<double> grad) const {
    const auto shape = spec_.net_shape();
    std::vector<double> grad_in(shape.input_dim());
    const std::size_t emb = spec_.embedding_params();
    mlp_backward(shape, net_params(), cache, grad_output, grad.subspan(emb), grad_in);
    double* g = grad.data() + static_cast<std::size_t>(label) * spec_.class_embed_dim;
    const std::size_t off = spec_.dim + spec_.time_embed_dim;
    for (std::size_t i = 0; i < spec_.class_embed_dim; ++i) g[i] += grad_in[off + i];
  }

 private:
  void check_label(int label) const {
    if (label < 0 || static_cast<std::size_t>(label) >= spec_.num_classes)
      throw DataError("ddpm: class " + std::to_string(label) + " out of range");
  }
  std::span<const double> class_row(int label) const {
    return params_.values().subspan(static_cast<std::size_t>(label) * spec_.class_embed_dim, spec_.class_embed_dim);
  }
  std::span<const double> net_params() const { return params_.values().subspan(spec_.embedding_params()); }

  DdpmSpec spec_;
  ParamVector params_;
};

/// ||noise - eps_theta(x_t, t, label)||^2 with x_t from the closed form.
inline double ddpm_loss(const DdpmModel& model, std::span<const double> x0, int label, std::size_t t,
                        std::span<const double> noise, const BetaSchedule& schedule) {
  if (x0.size() != model.spec().dim || noise.size() != model.spec().dim)
    throw DataError("ddpm_loss: dimension mismatch");
  const auto x_t = forward_diffuse_closed(x0, t, schedule, noise);
  const auto pred = model.predict(x_t, t, label);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) loss += (noise[i] - pred[i]) * (noise[i] - pred[i]);
  return loss;
}

/// ddpm_loss scaled by `weight`, with its gradient accumulated into `grad`.
inline double ddpm_loss_and_grad(const DdpmModel& model, std::span<const double> x0, int label, std::size_t t,
                                 std::span<const double> noise, const BetaSchedule& schedule,
                                 std::span<double> grad, double weight = 1.0) {
  if (x0.size() != model.spec().dim || noise.size() != model.spec().dim)
    throw DataError("ddpm_loss: dimension mismatch");
  if (grad.size() != model.params().size()) throw DataError("ddpm_loss: gradient size mismatch");
  const auto x_t = forward_diffuse_closed(x0, t, schedule, noise);
  MlpCache cache;
  const auto pred = model.predict(x_t, t, label, cache);
  std::vector<double> dout(pred.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - noise[i];
    loss += r * r;
    dout[i] = 2.0 * weight * r;
  }
  model.backward(cache, label, dout, grad);
  return weight * loss;
}

struct DdpmTrainConfig {
  std::size_t max_steps = 5000;
  std::size_t batch_size = 128;
  OptimizerConfig optimizer{OptimizerKind::adamw, 2e-3, 0.0, 0.9, 0.999, 1e-8};
  /// Window of the running loss (mean over the most recent steps).
  std::size_t loss_window = 200;
  /// Stop early once the running loss falls below this value; 0 disables.
  double target_loss = 0.0;

  void validate() const {
    if (max_steps == 0) throw ConfigError("ddpm.train.max_steps", "must be positive");
    if (batch_size == 0) throw ConfigError("ddpm.train.batch_size", "must be positive");
    if (loss_window == 0) throw ConfigError("ddpm.train.loss_window", "must be positive");
    optimizer.validate("ddpm.train.optimizer");
  }
};

struct DdpmTrainReport {
  std::size_t steps = 0;
  /// Windowed mean of the batch loss divided by the sample dimension, so
  /// the figure is per coordinate and comparable across dimensions.
  double running_loss = 0.0;
  bool reached_target = false;
};

struct DdpmTrainResult {
  DdpmModel model;
  DdpmTrainReport report;
};

/// Minibatch training of eps-prediction with t ~ U{1..T} and eps ~ N(0, I).
inline DdpmTrainResult train_ddpm(const LabeledDataset& data, const BetaSchedule& schedule, DdpmSpec spec,
                                  const DdpmTrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (data.empty()) throw DataError("train_ddpm: dataset is empty");
  spec.dim = data.dim();
  spec.num_classes = data.num_classes();
  DdpmTrainResult out{DdpmModel::initialized(spec, rng), {}};
  auto& model = out.model;
  const std::size_t D = spec.dim;
  std::vector<double> grad(model.params().size());
  std::vector<double> noise(D);
  std::vector<double> window(cfg.loss_window, 0.0);
  OptimizerState state(grad.size());
  const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);

  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const auto& s = data[rng.below(data.size())];
      const std::size_t t = 1 + rng.below(schedule.steps());
      for (auto& e : noise) e = rng.normal();
      batch_loss += ddpm_loss_and_grad(model, s.features, s.label, t, noise, schedule, grad, inv_b);
    }
    if (!std::isfinite(batch_loss)) throw DivergenceError(step, "ddpm training loss is not finite");
    optimizer_step(model.params().values(), grad, state, cfg.optimizer);

    window[step % cfg.loss_window] = batch_loss / static_cast<double>(D);
    const std::size_t filled = std::min(step + 1, cfg.loss_window);
    double sum = 0.0;
    for (std::size_t i = 0; i < filled; ++i) sum += window[i];
    out.report.steps = step + 1;
    out.report.running_loss = sum / static_cast<double>(filled);
    if (cfg.target_loss > 0.0 && filled == cfg.loss_window && out.report.running_loss < cfg.target_loss) {
      out.report.reached_target = true;
      break;
    }
  }
  if (cfg.target_loss > 0.0) out.report.reached_target = out.report.running_loss < cfg.target_loss;
  return out;
}

/// One ancestral step from x_t to x_{t-1}:
///   x_{t-1} = (x_t - beta_t / sqrt(1 - abar_t) * eps_theta) / sqrt(1 - beta_t) + sqrt(beta_t) z
/// with z = 0 at t = 1.
inline void ancestral_step(const DdpmModel& model, std::vector<double>& x, std::size_t t, int label,
                           const BetaSchedule& schedule, Rng& rng, MlpCache& cache) {
  const double beta = schedule.beta(t);
  const double coef = beta / std::sqrt(1.0 - schedule.alpha_bar(t));
  const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
  const auto eps = model.predict(x, t, label, cache);
  const double sigma = t > 1 ? std::sqrt(beta) : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = inv_sqrt_alpha * (x[i] - coef * eps[i]);
    if (sigma > 0.0) x[i] += sigma * rng.normal();
  }
}

/// `n` samples of class `label`, each from its own RNG substream, so results
/// are identical for any worker count.
inline std::vector<Sample> sample_ddpm(const DdpmModel& model, int label, std::size_t n,
                                       const BetaSchedule& schedule, Rng& rng, std::size_t workers = 1) {
  if (label < 0 || static_cast<std::size_t>(label) >= model.spec().num_classes)
    throw DataError("sample_ddpm: class " + std::to_string(label) + " out of range");
  const std::uint64_t base = rng.next_u64();
  std::vector<Sample> out(n);
  parallel_for(n, workers, [&](std::size_t i) {
    Rng r(derive_seed(base, "ddpm-sample", {i}));
    MlpCache cache;
    std::vector<double> x(model.spec().dim);
    for (auto& v : x) v = r.normal();
    for (std::size_t t = schedule.steps(); t >= 1; --t) ancestral_step(model, x, t, label, schedule, r, cache);
    out[i] = Sample{std::move(x), label};
  });
  return out;
}

class DdpmGenerator final : public Generator {
 public:
  DdpmGenerator(DdpmModel model, BetaSchedule schedule, std::size_t workers = 1)
      : model_(std::move(model)), schedule_(std::move(schedule)), workers_(workers) {}

  std::size_t sample_dim() const override { return model_.spec().dim; }
  bool supports(int label) const override {
    return label >= 0 && static_cast<std::size_t>(label) < model_.spec().num_classes;
  }
  std::vector<Sample> generate(const GenerationRequest& request, Rng& rng) const override {
    return sample_ddpm(model_, request.label, request.count, schedule_, rng, workers_);
  }

  const DdpmModel& model() const noexcept { return model_; }
  const BetaSchedule& schedule() const noexcept { return schedule_; }

 private:
  DdpmModel model_;
  BetaSchedule schedule_;
  std::size_t workers_;
};

}  // namespace fedsd
