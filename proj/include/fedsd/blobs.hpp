#pragma once

// Gaussian-blob benchmark datasets.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "fedsd/dataset.hpp"
#include "fedsd/rng.hpp"

namespace fedsd {

struct BlobsSpec {
  std::size_t num_classes = 10;
  std::size_t dim = 2;
  double radius = 3.0;  // distance of class centers from the origin
  double spread = 1.0;  // per-coordinate standard deviation
  /// Explicit class centers; when empty, centers are placed evenly on a
  /// circle in the first two coordinates (remaining coordinates get fixed
  /// pseudo-random offsets of scale radius / 2).
  std::vector<std::vector<double>> centers;
};

inline std::vector<std::vector<double>> blob_centers(const BlobsSpec& spec) {
  if (!spec.centers.empty()) {
    if (spec.centers.size() != spec.num_classes) throw DataError("blobs: need one center per class");
    for (const auto& c : spec.centers)
      if (c.size() != spec.dim) throw DataError("blobs: center dimension mismatch");
    return spec.centers;
  }
  std::vector<std::vector<double>> centers(spec.num_classes, std::vector<double>(spec.dim, 0.0));
  Rng offsets(derive_seed(0, "blob-centers", {spec.num_classes, spec.dim}));
  for (std::size_t y = 0; y < spec.num_classes; ++y) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(y) /
                         static_cast<double>(spec.num_classes);
    centers[y][0] = spec.radius * std::cos(angle);
    if (spec.dim > 1) centers[y][1] = spec.radius * std::sin(angle);
    for (std::size_t j = 2; j < spec.dim; ++j) centers[y][j] = 0.5 * spec.radius * offsets.normal();
  }
  return centers;
}

/// `per_class` samples of every class, grouped by class in label order.
inline LabeledDataset make_blobs(const BlobsSpec& spec, std::size_t per_class, std::uint64_t seed) {
  const auto centers = blob_centers(spec);
  LabeledDataset data(spec.dim, spec.num_classes);
  data.reserve(per_class * spec.num_classes);
  for (std::size_t y = 0; y < spec.num_classes; ++y) {
    Rng rng(derive_seed(seed, "blobs", {y}));
    for (std::size_t i = 0; i < per_class; ++i) {
      Sample s;
      s.label = static_cast<int>(y);
      s.features.resize(spec.dim);
      for (std::size_t j = 0; j < spec.dim; ++j) s.features[j] = rng.normal(centers[y][j], spec.spread);
      data.add(std::move(s));
    }
  }
  return data;
}

/// Index of the nearest center (squared Euclidean; ties go to the lower index).
inline int nearest_center(std::span<const double> x, const std::vector<std::vector<double>>& centers) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < centers.size(); ++y) {
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = x[j] - centers[y][j];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(y);
    }
  }
  return best;
}

}  // namespace fedsd
