#pragma once

// Test-only reference implementations. Nothing here calls into the library
// routine it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

/// Central finite-difference gradient of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||, floor)
inline double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-8) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

/// Two-sample Kolmogorov–Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// One-sample KS statistic against the standard normal CDF.
inline double ks_vs_standard_normal(std::vector<double> a) {
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-a[i] / std::sqrt(2.0));
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - cdf), std::abs(cdf - static_cast<double>(i) / n)});
  }
  return d;
}

/// Pearson chi-square statistic of observed counts against a uniform expectation.
inline double chi_square_uniform(std::span<const std::size_t> counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  double chi = 0.0;
  for (auto c : counts) chi += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return chi;
}

/// Scalar-loop FedAvg: sum_k n_k theta_k / sum_k n_k.
inline std::vector<double> fedavg(const std::vector<std::vector<double>>& thetas, const std::vector<double>& sizes) {
  double total = 0.0;
  for (double s : sizes) total += s;
  std::vector<double> out(thetas[0].size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) acc += sizes[k] * thetas[k][i];
    out[i] = acc / total;
  }
  return out;
}

/// Scalar-loop FedNova in its delta form:
/// theta_g - tau_eff * sum_k p_k (theta_g - theta_k) / tau_k.
inline std::vector<double> fednova(const std::vector<double>& global, const std::vector<std::vector<double>>& thetas,
                                   const std::vector<double>& sizes, const std::vector<double>& taus) {
  double total = 0.0;
  for (double s : sizes) total += s;
  double tau_eff = 0.0;
  for (std::size_t k = 0; k < sizes.size(); ++k) tau_eff += sizes[k] / total * taus[k];
  std::vector<double> out(global.size());
  for (std::size_t i = 0; i < global.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) acc += sizes[k] / total * (global[i] - thetas[k][i]) / taus[k];
    out[i] = global[i] - tau_eff * acc;
  }
  return out;
}

/// Scalar-loop Scaffold server step.
inline std::pair<std::vector<double>, std::vector<double>> scaffold(
    const std::vector<double>& global, const std::vector<double>& c_global,
    const std::vector<std::vector<double>>& thetas, const std::vector<std::vector<double>>& deltas, double server_lr,
    double num_clients) {
  const double S = static_cast<double>(thetas.size());
  std::vector<double> theta(global.size()), c(c_global.size());
  for (std::size_t i = 0; i < global.size(); ++i) {
    double mean_step = 0.0, mean_delta = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
      mean_step += thetas[k][i] - global[i];
      mean_delta += deltas[k][i];
    }
    theta[i] = global[i] + server_lr * mean_step / S;
    c[i] = c_global[i] + (S / num_clients) * mean_delta / S;
  }
  return {theta, c};
}

/// Independent AdamW (decoupled weight decay) reference.
struct AdamW {
  double lr, wd, b1, b2, eps;
  std::vector<double> m, v;
  int t = 0;

  void step(std::vector<double>& x, const std::vector<double>& g) {
    if (m.empty()) {
      m.assign(x.size(), 0.0);
      v.assign(x.size(), 0.0);
    }
    ++t;
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(b1, t));
      const double vh = v[i] / (1 - std::pow(b2, t));
      x[i] = x[i] - lr * (mh / (std::sqrt(vh) + eps) + wd * x[i]);
    }
  }
};

}  // namespace oracle
