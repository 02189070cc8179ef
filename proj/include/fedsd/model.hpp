#pragma once

// Classifier families: linear softmax regression and a one-hidden-layer
// tanh MLP, both trained with mean cross-entropy.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fedsd/dataset.hpp"
#include "fedsd/error.hpp"
#include "fedsd/mlp.hpp"
#include "fedsd/params.hpp"
#include "fedsd/rng.hpp"

namespace fedsd {

enum class ModelKind { linear, mlp };

inline std::string_view to_string(ModelKind k) noexcept { return k == ModelKind::linear ? "linear" : "mlp"; }

struct ModelSpec {
  ModelKind kind = ModelKind::mlp;
  std::size_t input_dim = 2;
  std::size_t num_classes = 2;
  std::size_t hidden = 32;

  MlpShape shape() const {
    if (kind == ModelKind::linear) return {{input_dim, num_classes}, Activation::tanh};
    return {{input_dim, hidden, num_classes}, Activation::tanh};
  }
  ParamLayout layout() const { return shape().layout(); }
  std::size_t param_count() const { return shape().param_count(); }
};

inline ParamVector init_params(const ModelSpec& spec, Rng& rng) {
  ParamVector p(spec.layout());
  mlp_init(spec.shape(), p.values(), rng);
  return p;
}

struct LossResult {
  double loss = 0.0;        // mean cross-entropy over the batch
  std::size_t correct = 0;  // argmax hits
};

namespace detail {

/// Cross-entropy of `logits` against `label`; writes softmax - onehot into
/// `dlogits` when non-empty.
inline double softmax_xent(std::span<const double> logits, int label, std::span<double> dlogits) {
  const double hi = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - hi);
  const double lse = hi + std::log(sum);
  if (!dlogits.empty()) {
    for (std::size_t c = 0; c < logits.size(); ++c) dlogits[c] = std::exp(logits[c] - lse);
    dlogits[static_cast<std::size_t>(label)] -= 1.0;
  }
  return lse - logits[static_cast<std::size_t>(label)];
}

inline bool argmax_hit(std::span<const double> logits, int label) {
  const auto it = std::max_element(logits.begin(), logits.end());
  return static_cast<int>(it - logits.begin()) == label;
}

inline void check_batch(const ModelSpec& spec, const ParamVector& params, const LabeledDataset& data) {
  if (params.size() != spec.param_count()) throw DataError("model parameters do not match model spec");
  if (data.dim() != spec.input_dim) throw DataError("dataset dimension does not match model input");
  if (data.num_classes() != spec.num_classes) throw DataError("dataset classes do not match model output");
}

}  // namespace detail

/// Loss and accuracy over `data[indices]`, or all of `data` when `indices`
/// is empty. A non-finite loss raises DivergenceError (step 0).
inline LossResult forward_loss(const ModelSpec& spec, const ParamVector& params, const LabeledDataset& data,
                               std::span<const std::size_t> indices = {}) {
  detail::check_batch(spec, params, data);
  const std::size_t n = indices.empty() ? data.size() : indices.size();
  if (n == 0) throw DataError("forward_loss: empty batch");
  const auto shape = spec.shape();
  MlpCache cache;
  LossResult r;
  for (std::size_t b = 0; b < n; ++b) {
    const auto& s = data[indices.empty() ? b : indices[b]];
    const auto logits = mlp_forward(shape, params.values(), s.features, cache);
    r.loss += detail::softmax_xent(logits, s.label, {});
    r.correct += detail::argmax_hit(logits, s.label) ? 1 : 0;
  }
  r.loss /= static_cast<double>(n);
  if (!std::isfinite(r.loss)) throw DivergenceError(0, "non-finite classifier loss");
  return r;
}

/// forward_loss plus its gradient with respect to the parameters, written
/// into `grad` (overwritten).
inline LossResult loss_and_grad(const ModelSpec& spec, const ParamVector& params, const LabeledDataset& data,
                                std::span<const std::size_t> indices, std::span<double> grad) {
  detail::check_batch(spec, params, data);
  if (grad.size() != params.size()) throw DataError("loss_and_grad: gradient size mismatch");
  const std::size_t n = indices.empty() ? data.size() : indices.size();
  if (n == 0) throw DataError("loss_and_grad: empty batch");
  const auto shape = spec.shape();
  std::fill(grad.begin(), grad.end(), 0.0);
  MlpCache cache;
  std::vector<double> dlogits(spec.num_classes);
  const double inv_n = 1.0 / static_cast<double>(n);
  LossResult r;
  for (std::size_t b = 0; b < n; ++b) {
    const auto& s = data[indices.empty() ? b : indices[b]];
    const auto logits = mlp_forward(shape, params.values(), s.features, cache);
    r.loss += detail::softmax_xent(logits, s.label, dlogits);
    r.correct += detail::argmax_hit(logits, s.label) ? 1 : 0;
    for (auto& d : dlogits) d *= inv_n;
    mlp_backward(shape, params.values(), cache, dlogits, grad);
  }
  r.loss *= inv_n;
  if (!std::isfinite(r.loss)) throw DivergenceError(0, "non-finite classifier loss");
  return r;
}

/// Top-1 accuracy on the whole dataset.
inline double accuracy(const ModelSpec& spec, const ParamVector& params, const LabeledDataset& data) {
  detail::check_batch(spec, params, data);
  if (data.empty()) return 0.0;
  const auto shape = spec.shape();
  MlpCache cache;
  std::size_t hits = 0;
  for (const auto& s : data) hits += detail::argmax_hit(mlp_forward(shape, params.values(), s.features, cache), s.label) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace fedsd
