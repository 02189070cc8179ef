#pragma once

// Portable seeded randomness. Every distribution here is implemented in
// terms of raw 64-bit draws so results do not depend on the standard
// library's (implementation-defined) distribution algorithms.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace fedsd {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Child seed for the named substream `tag` with integer coordinates `ids`.
/// Distinct (tag, ids) give statistically independent streams, and adding a
/// new coordinate value never perturbs the streams of existing ones.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                                 std::initializer_list<std::uint64_t> ids = {}) noexcept {
  std::uint64_t state = parent ^ 0x6A09E667F3BCC909ULL;
  std::uint64_t h = splitmix64(state) ^ fnv1a64(tag);
  state = h;
  h = splitmix64(state);
  for (std::uint64_t id : ids) {
    state = h ^ (id + 0x9E3779B97F4A7C15ULL);
    h = splitmix64(state);
  }
  return h;
}

/// xoshiro256** seeded through splitmix64. Satisfies
/// UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

  void reseed(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// New independent generator for a named substream, seeded from this
  /// generator's next draw.
  Rng split(std::string_view tag, std::initializer_list<std::uint64_t> ids = {}) noexcept {
    return Rng(derive_seed(next_u64(), tag, ids));
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  /// Unbiased integer in [0, bound). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller (one value per call, no cached state).
  double normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  /// log of a Gamma(shape, 1) variate. Working in log space keeps tiny
  /// shapes (Dirichlet alpha ~ 0.01) from underflowing to zero.
  double log_gamma_variate(double shape) noexcept {
    if (shape < 1.0) {
      // G(a) = G(a + 1) * U^(1/a)
      return log_gamma_variate(shape + 1.0) + std::log(uniform_open()) / shape;
    }
    // Marsaglia & Tsang.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0;
      double v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return std::log(d * v);
    }
  }

  double gamma(double shape) noexcept { return std::exp(log_gamma_variate(shape)); }

  /// Symmetric Dirichlet(alpha * 1_k) draw.
  std::vector<double> dirichlet(std::size_t k, double alpha) {
    std::vector<double> logs(k);
    double hi = -std::numeric_limits<double>::infinity();
    for (auto& l : logs) {
      l = log_gamma_variate(alpha);
      hi = std::max(hi, l);
    }
    double total = 0.0;
    for (auto& l : logs) {
      l = std::exp(l - hi);
      total += l;
    }
    for (auto& l : logs) l /= total;
    return logs;
  }

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    shuffle(std::span<T>(items));
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4]{};
};

}  // namespace fedsd
