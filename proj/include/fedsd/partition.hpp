#pragma once

// Class-wise Dirichlet label-skew partitioning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "fedsd/dataset.hpp"
#include "fedsd/error.hpp"
#include "fedsd/rng.hpp"

namespace fedsd {

struct PartitionSpec {
  std::size_t num_clients = 1;
  double alpha = 0.5;
  std::uint64_t seed = 0;
};

using ClientIndices = std::vector<std::vector<std::size_t>>;

inline constexpr std::size_t kMaxPartitionAttempts = 100;

/// Splits `total` items by `proportions` into integer counts summing exactly
/// to `total`: floors first, then one extra item to each of the largest
/// fractional remainders (ties to the lower index).
inline std::vector<std::size_t> largest_remainder_split(std::size_t total,
                                                        std::span<const double> proportions) {
  const std::size_t k = proportions.size();
  std::vector<std::size_t> counts(k, 0);
  std::vector<double> frac(k, 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double quota = static_cast<double>(total) * proportions[i];
    const double fl = std::floor(quota);
    counts[i] = static_cast<std::size_t>(fl);
    frac[i] = quota - fl;
    assigned += counts[i];
  }
  // Rounding in the proportions can overshoot by a unit; trim from the smallest remainders.
  while (assigned > total) {
    std::size_t pick = k;
    for (std::size_t i = 0; i < k; ++i)
      if (counts[i] > 0 && (pick == k || frac[i] < frac[pick])) pick = i;
    --counts[pick];
    --assigned;
    frac[pick] = 1.0;
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++counts[order[r % k]];
  return counts;
}

/// For every class y, draws client shares p ~ Dirichlet(alpha * 1_N), shuffles
/// the class-y indices and hands out consecutive slices sized by
/// largest-remainder rounding of p. A draw that leaves some client with no
/// samples at all is repeated (fresh substreams) up to
/// kMaxPartitionAttempts times.
///
/// Returns one ascending index list per client. The lists are disjoint and
/// together cover [0, dataset.size()).
inline ClientIndices dirichlet_partition(const LabeledDataset& dataset, const PartitionSpec& spec) {
  if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha))
    throw ConfigError("partition.alpha", "must be a positive finite number");
  if (spec.num_clients < 1) throw ConfigError("partition.num_clients", "must be at least 1");
  if (dataset.empty()) throw DataError("dirichlet_partition: dataset is empty");

  const std::size_t n_clients = spec.num_clients;
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
  for (std::size_t y = 0; y < dataset.num_classes(); ++y) {
    by_class[y] = dataset.indices_of(static_cast<int>(y));
    if (by_class[y].empty())
      throw DataError("dirichlet_partition: class " + std::to_string(y) + " has no samples");
  }

  for (std::size_t attempt = 0; attempt < kMaxPartitionAttempts; ++attempt) {
    ClientIndices clients(n_clients);
    for (std::size_t y = 0; y < by_class.size(); ++y) {
      Rng share_rng(derive_seed(spec.seed, "partition/dirichlet", {attempt, y}));
      Rng shuffle_rng(derive_seed(spec.seed, "partition/shuffle", {attempt, y}));
      const auto shares = share_rng.dirichlet(n_clients, spec.alpha);
      auto idx = by_class[y];
      shuffle_rng.shuffle(idx);
      const auto counts = largest_remainder_split(idx.size(), shares);
      std::size_t cursor = 0;
      for (std::size_t k = 0; k < n_clients; ++k) {
        clients[k].insert(clients[k].end(), idx.begin() + static_cast<std::ptrdiff_t>(cursor),
                          idx.begin() + static_cast<std::ptrdiff_t>(cursor + counts[k]));
        cursor += counts[k];
      }
    }
    const bool any_empty =
        std::any_of(clients.begin(), clients.end(), [](const auto& c) { return c.empty(); });
    if (any_empty) continue;
    for (auto& c : clients) std::sort(c.begin(), c.end());
    return clients;
  }
  throw ConfigError("partition", "some client received no samples in " +
                                     std::to_string(kMaxPartitionAttempts) +
                                     " attempts; lower num_clients or raise alpha");
}

/// Histogram of each client's share of `dataset`.
inline std::vector<LabelHistogram> client_histograms(const LabeledDataset& dataset,
                                                     const ClientIndices& parts) {
  std::vector<LabelHistogram> out;
  out.reserve(parts.size());
  for (const auto& idx : parts) {
    LabelHistogram h(dataset.num_classes());
    for (auto i : idx) ++h[static_cast<std::size_t>(dataset[i].label)];
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace fedsd
