#pragma once

// Server-side aggregation rules.
//
// Every rule is evaluated as an affine combination
//   theta' = sum_k c_k * theta_k  (+ c_g * theta_global when c_g != 0)
// summed in update order. FedAvg weights are n_k / n_total; FedNova's
// coefficients are computed as exact rationals before rounding, so when all
// local step counts agree they round to the very same doubles as FedAvg's.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "fedsd/error.hpp"
#include "fedsd/local_train.hpp"
#include "fedsd/params.hpp"

namespace fedsd {

namespace detail {

inline void check_updates(std::span<const ClientUpdate> updates, const ParamVector* reference) {
  if (updates.empty()) throw DataError("aggregate: no client updates");
  const ParamVector& ref = reference != nullptr ? *reference : updates.front().params;
  for (const auto& u : updates) {
    require_same_layout(u.params, ref, "aggregate");
    if (u.num_samples == 0) throw DataError("aggregate: update with zero samples");
  }
}

/// sum_k coeffs[k] * updates[k].params (+ global_coeff * global).
inline ParamVector affine_combination(std::span<const ClientUpdate> updates, std::span<const double> coeffs,
                                      const ParamVector* global = nullptr, double global_coeff = 0.0) {
  ParamVector out(updates.front().params.layout());
  const std::size_t P = out.size();
  for (std::size_t i = 0; i < P; ++i) {
    double acc = coeffs[0] * updates[0].params[i];
    for (std::size_t k = 1; k < updates.size(); ++k) acc += coeffs[k] * updates[k].params[i];
    out[i] = acc;
  }
  if (global != nullptr && global_coeff != 0.0)
    for (std::size_t i = 0; i < P; ++i) out[i] += global_coeff * (*global)[i];
  return out;
}

/// Non-negative rational with 128-bit parts, reduced after every operation.
struct Rational {
  unsigned __int128 num = 0;
  unsigned __int128 den = 1;

  static unsigned __int128 gcd(unsigned __int128 a, unsigned __int128 b) {
    while (b != 0) {
      const auto t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static constexpr unsigned __int128 kLimit = static_cast<unsigned __int128>(1) << 120;

  void reduce() {
    const auto g = gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  static std::optional<Rational> make(unsigned __int128 n, unsigned __int128 d) {
    if (d == 0) return std::nullopt;
    Rational r{n, d};
    r.reduce();
    return r;
  }

  static bool mul_ok(unsigned __int128 a, unsigned __int128 b) { return a == 0 || b <= kLimit / a; }

  friend std::optional<Rational> operator*(const Rational& a, const Rational& b) {
    const auto g1 = gcd(a.num, b.den), g2 = gcd(b.num, a.den);
    const auto n1 = g1 ? a.num / g1 : a.num, d2 = g1 ? b.den / g1 : b.den;
    const auto n2 = g2 ? b.num / g2 : b.num, d1 = g2 ? a.den / g2 : a.den;
    if (!mul_ok(n1, n2) || !mul_ok(d1, d2)) return std::nullopt;
    return make(n1 * n2, d1 * d2);
  }

  friend std::optional<Rational> operator+(const Rational& a, const Rational& b) {
    const auto g = gcd(a.den, b.den);
    const auto da = a.den / g;
    if (!mul_ok(da, b.den) || !mul_ok(a.num, b.den / g) || !mul_ok(b.num, da)) return std::nullopt;
    const auto n1 = a.num * (b.den / g), n2 = b.num * da;
    if (n1 > kLimit - n2) return std::nullopt;
    return make(n1 + n2, da * b.den);
  }

  /// Correctly rounded whenever both parts fit in 53 bits.
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

}  // namespace detail

/// FedAvg weights n_k / sum_j n_j.
inline std::vector<double> fedavg_weights(std::span<const ClientUpdate> updates) {
  double total = 0.0;
  for (const auto& u : updates) total += static_cast<double>(u.num_samples);
  std::vector<double> w;
  w.reserve(updates.size());
  for (const auto& u : updates) w.push_back(static_cast<double>(u.num_samples) / total);
  return w;
}

/// theta' = sum_k (n_k / sum_j n_j) * theta_k
inline ParamVector aggregate_fedavg(std::span<const ClientUpdate> updates) {
  detail::check_updates(updates, nullptr);
  const auto w = fedavg_weights(updates);
  return detail::affine_combination(updates, w);
}

struct FedNovaCoefficients {
  std::vector<double> client;  // c_k = tau_eff * p_k / tau_k
  double global = 0.0;         // 1 - sum_k c_k
};

/// Coefficients of normalized averaging, p_k = n_k / sum n_j and
/// tau_eff = sum p_k tau_k, computed exactly when the integers allow.
inline FedNovaCoefficients fednova_coefficients(std::span<const ClientUpdate> updates) {
  for (const auto& u : updates)
    if (u.local_steps == 0) throw DataError("aggregate_fednova: update with zero local steps");

  using detail::Rational;
  unsigned __int128 n_total = 0;
  unsigned __int128 weighted_steps = 0;  // sum n_j tau_j
  for (const auto& u : updates) {
    n_total += u.num_samples;
    weighted_steps += static_cast<unsigned __int128>(u.num_samples) * u.local_steps;
  }

  FedNovaCoefficients out;
  bool exact = true;
  std::optional<Rational> sum = Rational{0, 1};
  for (const auto& u : updates) {
    // c_k = weighted_steps * n_k / (n_total^2 * tau_k)
    auto ck = Rational::make(weighted_steps, n_total * n_total);
    if (ck) ck = *ck * Rational{u.num_samples, u.local_steps};
    if (ck) ck->reduce();
    if (!ck) {
      exact = false;
      break;
    }
    out.client.push_back(ck->to_double());
    if (sum) sum = *sum + *ck;
    if (!sum) exact = false;
  }

  if (exact && sum) {
    // 1 - sum; sum may exceed one, so work with signed doubles after the exact compare.
    if (sum->num == sum->den) {
      out.global = 0.0;
    } else {
      out.global = 1.0 - sum->to_double();
    }
    return out;
  }

  out.client.clear();
  const double nt = static_cast<double>(n_total);
  double tau_eff = 0.0;
  for (const auto& u : updates) tau_eff += static_cast<double>(u.num_samples) / nt * static_cast<double>(u.local_steps);
  double s = 0.0;
  for (const auto& u : updates) {
    out.client.push_back(tau_eff * (static_cast<double>(u.num_samples) / nt) / static_cast<double>(u.local_steps));
    s += out.client.back();
  }
  out.global = 1.0 - s;
  return out;
}

/// theta' = theta_g - tau_eff * sum_k p_k (theta_g - theta_k) / tau_k
inline ParamVector aggregate_fednova(std::span<const ClientUpdate> updates, const ParamVector& global_params) {
  detail::check_updates(updates, &global_params);
  const auto c = fednova_coefficients(updates);
  return detail::affine_combination(updates, c.client, &global_params, c.global);
}

struct ScaffoldResult {
  ParamVector params;
  ParamVector c_global;
};

/// theta' = theta_g + server_lr * mean_k(theta_k - theta_g)
/// c'     = c + (|S| / num_clients) * mean_k(cv_delta_k)
inline ScaffoldResult aggregate_scaffold(std::span<const ClientUpdate> updates, const ParamVector& global_params,
                                         const ParamVector& c_global, double server_lr, std::size_t num_clients) {
  detail::check_updates(updates, &global_params);
  require_same_layout(c_global, global_params, "aggregate_scaffold");
  if (num_clients == 0) throw DataError("aggregate_scaffold: num_clients must be positive");
  for (const auto& u : updates) {
    if (!u.cv_delta) throw DataError("aggregate_scaffold: update is missing its control-variate delta");
    require_same_layout(*u.cv_delta, global_params, "aggregate_scaffold");
  }
  const double S = static_cast<double>(updates.size());
  const std::vector<double> w(updates.size(), 1.0 / S);

  ScaffoldResult out;
  // (1 - lr) theta_g + lr * mean_k theta_k
  out.params = detail::affine_combination(updates, w);
  if (server_lr != 1.0)
    for (std::size_t i = 0; i < out.params.size(); ++i)
      out.params[i] = (1.0 - server_lr) * global_params[i] + server_lr * out.params[i];

  out.c_global = c_global;
  const double frac = S / static_cast<double>(num_clients);
  for (std::size_t i = 0; i < out.c_global.size(); ++i) {
    double mean = 0.0;
    for (const auto& u : updates) mean += (*u.cv_delta)[i];
    mean /= S;
    out.c_global[i] += frac * mean;
  }
  return out;
}

}  // namespace fedsd
