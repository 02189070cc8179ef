#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fedsd/error.hpp"

namespace fedsd {

struct TensorShape {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 1;

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

using ParamLayout = std::vector<TensorShape>;

inline std::size_t layout_size(const ParamLayout& layout) noexcept {
  std::size_t n = 0;
  for (const auto& t : layout) n += t.size();
  return n;
}

/// Flat model parameters plus the shapes of the tensors packed into them.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(ParamLayout layout, double fill = 0.0)
      : layout_(std::move(layout)), values_(layout_size(layout_), fill) {}
  ParamVector(ParamLayout layout, std::vector<double> values)
      : layout_(std::move(layout)), values_(std::move(values)) {
    if (values_.size() != layout_size(layout_)) throw DataError("ParamVector: size does not match layout");
  }

  std::size_t size() const noexcept { return values_.size(); }
  const ParamLayout& layout() const noexcept { return layout_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  bool same_layout(const ParamVector& other) const noexcept { return layout_ == other.layout_; }

  bool all_finite() const noexcept {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double norm() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  ParamLayout layout_;
  std::vector<double> values_;
};

inline void require_same_layout(const ParamVector& a, const ParamVector& b, const char* what) {
  if (!a.same_layout(b)) throw DataError(std::string(what) + ": parameter layout mismatch");
}

/// a - b
inline ParamVector difference(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a, b, "difference");
  ParamVector out(a.layout());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

}  // namespace fedsd
