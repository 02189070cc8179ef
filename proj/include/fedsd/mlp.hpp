#pragma once

// Fully connected network over a flat parameter span with hand-written
// backpropagation. Hidden layers use `activation`; the output layer is
// linear. Parameters are packed per layer as W (out × in, row-major) then b.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fedsd/error.hpp"
#include "fedsd/params.hpp"
#include "fedsd/rng.hpp"

namespace fedsd {

enum class Activation { tanh, silu, relu };

inline std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::silu: return "silu";
    case Activation::relu: return "relu";
  }
  return "unknown";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "silu") return Activation::silu;
  if (s == "relu") return Activation::relu;
  throw ConfigError("activation", "unknown activation '" + std::string(s) + "'");
}

struct MlpShape {
  std::vector<std::size_t> sizes;  // input, hidden..., output
  Activation activation = Activation::tanh;

  std::size_t layers() const noexcept { return sizes.size() - 1; }
  std::size_t input_dim() const noexcept { return sizes.front(); }
  std::size_t output_dim() const noexcept { return sizes.back(); }

  ParamLayout layout(const std::string& prefix = "") const {
    ParamLayout out;
    for (std::size_t l = 0; l < layers(); ++l) {
      out.push_back({prefix + "W" + std::to_string(l), sizes[l + 1], sizes[l]});
      out.push_back({prefix + "b" + std::to_string(l), sizes[l + 1], 1});
    }
    return out;
  }

  std::size_t param_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t l = 0; l < layers(); ++l) n += sizes[l + 1] * (sizes[l] + 1);
    return n;
  }
};

struct MlpCache {
  std::vector<std::vector<double>> pre;   // pre-activation per layer
  std::vector<std::vector<double>> post;  // post[0] = input, post.back() = output
};

namespace detail {

inline double activate(Activation a, double z) noexcept {
  switch (a) {
    case Activation::tanh: return std::tanh(z);
    case Activation::silu: return z / (1.0 + std::exp(-z));
    case Activation::relu: return z > 0.0 ? z : 0.0;
  }
  return z;
}

inline double activate_grad(Activation a, double z) noexcept {
  switch (a) {
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::silu: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 + z * (1.0 - s));
    }
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace detail

/// Glorot-uniform weights, zero biases.
inline void mlp_init(const MlpShape& shape, std::span<double> params, Rng& rng) {
  if (params.size() != shape.param_count()) throw DataError("mlp_init: parameter count mismatch");
  std::size_t off = 0;
  for (std::size_t l = 0; l < shape.layers(); ++l) {
    const std::size_t in = shape.sizes[l], out = shape.sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) params[off++] = (2.0 * rng.uniform() - 1.0) * limit;
    for (std::size_t i = 0; i < out; ++i) params[off++] = 0.0;
  }
}

inline std::span<const double> mlp_forward(const MlpShape& shape, std::span<const double> params,
                                           std::span<const double> input, MlpCache& cache) {
  if (input.size() != shape.input_dim()) throw DataError("mlp_forward: input dimension mismatch");
  const std::size_t L = shape.layers();
  cache.pre.resize(L);
  cache.post.resize(L + 1);
  cache.post[0].assign(input.begin(), input.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t in = shape.sizes[l], out = shape.sizes[l + 1];
    const double* W = params.data() + off;
    const double* b = W + in * out;
    off += out * (in + 1);
    const auto& x = cache.post[l];
    auto& z = cache.pre[l];
    z.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = W + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
      z[o] = acc;
    }
    auto& a = cache.post[l + 1];
    a.resize(out);
    const bool last = (l + 1 == L);
    for (std::size_t o = 0; o < out; ++o) a[o] = last ? z[o] : detail::activate(shape.activation, z[o]);
  }
  return cache.post.back();
}

/// Accumulates dLoss/dparams into `grad` (+=) given dLoss/doutput. When
/// `grad_input` is non-empty it receives dLoss/dinput (overwritten).
inline void mlp_backward(const MlpShape& shape, std::span<const double> params, const MlpCache& cache,
                         std::span<const double> grad_output, std::span<double> grad,
                         std::span<double> grad_input = {}) {
  const std::size_t L = shape.layers();
  std::vector<std::size_t> offsets(L);
  std::size_t off = 0;
  for (std::size_t l = 0; l < L; ++l) {
    offsets[l] = off;
    off += shape.sizes[l + 1] * (shape.sizes[l] + 1);
  }
  std::vector<double> delta(grad_output.begin(), grad_output.end());  // dL/dz of layer l
  std::vector<double> prev;
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t in = shape.sizes[l], out = shape.sizes[l + 1];
    const double* W = params.data() + offsets[l];
    double* gW = grad.data() + offsets[l];
    double* gb = gW + in * out;
    const auto& x = cache.post[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      double* grow = gW + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * x[i];
      gb[o] += d;
    }
    if (l == 0 && grad_input.empty()) break;
    prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* row = W + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * d;
    }
    if (l == 0) {
      std::copy(prev.begin(), prev.end(), grad_input.begin());
      break;
    }
    const auto& z = cache.pre[l - 1];
    for (std::size_t i = 0; i < in; ++i) prev[i] *= detail::activate_grad(shape.activation, z[i]);
    delta.swap(prev);
  }
}

}  // namespace fedsd
