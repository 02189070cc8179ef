#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedsd/error.hpp"

namespace fedsd {

struct Sample {
  std::vector<double> features;
  int label = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

enum class Provenance { local, synthetic, augmented };

inline std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::local: return "local";
    case Provenance::synthetic: return "synthetic";
    case Provenance::augmented: return "augmented";
  }
  return "unknown";
}

/// Per-class sample counts.
class LabelHistogram {
 public:
  LabelHistogram() = default;
  explicit LabelHistogram(std::size_t num_classes) : counts_(num_classes, 0) {}
  explicit LabelHistogram(std::vector<std::size_t> counts) : counts_(std::move(counts)) {}

  std::size_t num_classes() const noexcept { return counts_.size(); }
  std::size_t operator[](std::size_t label) const { return counts_.at(label); }
  std::size_t& operator[](std::size_t label) { return counts_.at(label); }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }

  std::size_t total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
  }

  /// Empirical label distribution; all zeros for an empty histogram.
  std::vector<double> proportions() const {
    std::vector<double> p(counts_.size(), 0.0);
    const auto n = total();
    if (n == 0) return p;
    for (std::size_t y = 0; y < counts_.size(); ++y)
      p[y] = static_cast<double>(counts_[y]) / static_cast<double>(n);
    return p;
  }

  friend bool operator==(const LabelHistogram&, const LabelHistogram&) = default;

 private:
  std::vector<std::size_t> counts_;
};

/// Total-variation distance between two distributions of equal length.
inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DataError("total_variation: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

/// Labeled samples sharing one feature dimension.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  LabeledDataset(std::size_t dim, std::size_t num_classes,
                 Provenance provenance = Provenance::local)
      : dim_(dim), num_classes_(num_classes), provenance_(provenance) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  Provenance provenance() const noexcept { return provenance_; }
  void set_provenance(Provenance p) noexcept { provenance_ = p; }

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  auto begin() const noexcept { return samples_.begin(); }
  auto end() const noexcept { return samples_.end(); }

  void reserve(std::size_t n) { samples_.reserve(n); }

  void add(Sample s) {
    if (s.features.size() != dim_)
      throw DataError("sample dimension " + std::to_string(s.features.size()) +
                      " does not match dataset dimension " + std::to_string(dim_));
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= num_classes_)
      throw DataError("label " + std::to_string(s.label) + " outside [0, " +
                      std::to_string(num_classes_) + ")");
    samples_.push_back(std::move(s));
  }

  void append(const LabeledDataset& other) {
    if (other.dim_ != dim_ || other.num_classes_ != num_classes_)
      throw DataError("append: dataset shape mismatch");
    samples_.insert(samples_.end(), other.samples_.begin(), other.samples_.end());
  }

  /// Samples at `indices`, in the order given.
  LabeledDataset subset(std::span<const std::size_t> indices) const {
    LabeledDataset out(dim_, num_classes_, provenance_);
    out.samples_.reserve(indices.size());
    for (auto i : indices) out.samples_.push_back(samples_.at(i));
    return out;
  }

  /// Indices of every sample with label `y`, ascending.
  std::vector<std::size_t> indices_of(int y) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples_.size(); ++i)
      if (samples_[i].label == y) out.push_back(i);
    return out;
  }

 private:
  std::size_t dim_ = 0;
  std::size_t num_classes_ = 0;
  Provenance provenance_ = Provenance::local;
  std::vector<Sample> samples_;
};

inline LabelHistogram histogram(const LabeledDataset& dataset) {
  LabelHistogram h(dataset.num_classes());
  for (const auto& s : dataset) ++h[static_cast<std::size_t>(s.label)];
  return h;
}

/// Per-feature [lo, hi] ranges fitted on a reference dataset.
struct MinMaxScaler {
  std::vector<double> lo;
  std::vector<double> hi;

  static MinMaxScaler fit(const LabeledDataset& data) {
    MinMaxScaler s;
    s.lo.assign(data.dim(), std::numeric_limits<double>::infinity());
    s.hi.assign(data.dim(), -std::numeric_limits<double>::infinity());
    for (const auto& sample : data) {
      for (std::size_t j = 0; j < data.dim(); ++j) {
        s.lo[j] = std::min(s.lo[j], sample.features[j]);
        s.hi[j] = std::max(s.hi[j], sample.features[j]);
      }
    }
    return s;
  }

  /// Maps each feature to [0, 1] relative to the fitted range. Constant
  /// features map to 0.
  LabeledDataset transform(const LabeledDataset& data) const {
    if (data.dim() != lo.size()) throw DataError("MinMaxScaler: dimension mismatch");
    LabeledDataset out(data.dim(), data.num_classes(), data.provenance());
    out.reserve(data.size());
    for (const auto& sample : data) {
      Sample t = sample;
      for (std::size_t j = 0; j < t.features.size(); ++j) {
        const double range = hi[j] - lo[j];
        t.features[j] = range > 0.0 ? (t.features[j] - lo[j]) / range : 0.0;
      }
      out.add(std::move(t));
    }
    return out;
  }
};

}  // namespace fedsd
