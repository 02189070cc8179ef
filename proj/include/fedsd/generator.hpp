#pragma once

// Class-conditional sample generators. A generator turns (class, count,
// optional per-image prompts) into labeled samples of a fixed dimension.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fedsd/dataset.hpp"
#include "fedsd/error.hpp"
#include "fedsd/log.hpp"
#include "fedsd/prompts.hpp"
#include "fedsd/rng.hpp"

namespace fedsd {

struct GenerationRequest {
  int label = 0;
  std::size_t count = 0;
  /// Either empty or exactly `count` entries, one per image.
  std::vector<Prompt> prompts;
};

/// Implementations must be safe to call concurrently from several threads;
/// all randomness comes from the caller-supplied generator.
class Generator {
 public:
  virtual ~Generator() = default;

  virtual std::size_t sample_dim() const = 0;
  virtual bool supports(int label) const = 0;
  virtual std::vector<Sample> generate(const GenerationRequest& request, Rng& rng) const = 0;
};

/// Validates the request, calls the generator and checks its output contract.
inline std::vector<Sample> generate(const Generator& gen, const GenerationRequest& request, Rng& rng) {
  if (!gen.supports(request.label))
    throw GenerationError(request.label, 0, "class not supported by generator");
  if (!request.prompts.empty() && request.prompts.size() != request.count)
    throw GenerationError(request.label, 0, "prompt count does not match sample count");
  if (request.count == 0) return {};
  auto out = gen.generate(request, rng);
  if (out.size() != request.count)
    throw GenerationError(request.label, 0,
                          "generator returned " + std::to_string(out.size()) + " samples, expected " +
                              std::to_string(request.count));
  for (const auto& s : out) {
    if (s.label != request.label) throw GenerationError(request.label, 0, "generator returned wrong label");
    if (s.features.size() != gen.sample_dim())
      throw GenerationError(request.label, 0, "generator returned wrong sample dimension");
  }
  return out;
}

inline std::vector<Sample> generate(const Generator& gen, int label, std::size_t count, Rng& rng) {
  return generate(gen, GenerationRequest{label, count, {}}, rng);
}

/// Serves real held-out samples from a per-class reserve. Each call draws
/// without replacement from a fresh permutation of the class reserve; once
/// the reserve is exhausted it continues with replacement and warns.
class PoolGenerator final : public Generator {
 public:
  explicit PoolGenerator(LabeledDataset reserve) : reserve_(std::move(reserve)) {
    by_class_.resize(reserve_.num_classes());
    for (std::size_t i = 0; i < reserve_.size(); ++i)
      by_class_[static_cast<std::size_t>(reserve_[i].label)].push_back(i);
  }

  std::size_t sample_dim() const override { return reserve_.dim(); }

  bool supports(int label) const override {
    return label >= 0 && static_cast<std::size_t>(label) < by_class_.size() &&
           !by_class_[static_cast<std::size_t>(label)].empty();
  }

  std::vector<Sample> generate(const GenerationRequest& request, Rng& rng) const override {
    auto idx = by_class_.at(static_cast<std::size_t>(request.label));
    rng.shuffle(idx);
    std::vector<Sample> out;
    out.reserve(request.count);
    for (std::size_t i = 0; i < request.count && i < idx.size(); ++i) out.push_back(reserve_[idx[i]]);
    if (request.count > idx.size()) {
      warn("pool generator: reserve of class " + std::to_string(request.label) + " has " +
           std::to_string(idx.size()) + " samples, " + std::to_string(request.count) +
           " requested; drawing the rest with replacement");
      while (out.size() < request.count) out.push_back(reserve_[idx[rng.below(idx.size())]]);
    }
    return out;
  }

  const LabeledDataset& reserve() const noexcept { return reserve_; }

 private:
  LabeledDataset reserve_;
  std::vector<std::vector<std::size_t>> by_class_;
};

/// Isotropic Gaussian per class. When prompts are supplied, each prompt
/// template shifts the class mean by a fixed pseudo-random offset of length
/// `template_jitter`, standing in for the stylistic bias of one prompt.
class GaussianGenerator final : public Generator {
 public:
  GaussianGenerator(std::vector<std::vector<double>> means, double stddev,
                    double template_jitter = 0.0, std::uint64_t jitter_seed = 0)
      : means_(std::move(means)), stddev_(stddev), jitter_(template_jitter), jitter_seed_(jitter_seed) {
    if (means_.empty()) throw ConfigError("generator.gaussian", "no class means");
    for (const auto& m : means_)
      if (m.size() != means_.front().size())
        throw ConfigError("generator.gaussian", "class means differ in dimension");
    if (!(stddev_ >= 0.0)) throw ConfigError("generator.gaussian.stddev", "must be non-negative");
    if (!(jitter_ >= 0.0)) throw ConfigError("generator.gaussian.template_jitter", "must be non-negative");
  }

  std::size_t sample_dim() const override { return means_.front().size(); }

  bool supports(int label) const override {
    return label >= 0 && static_cast<std::size_t>(label) < means_.size();
  }

  std::vector<Sample> generate(const GenerationRequest& request, Rng& rng) const override {
    const auto& mean = means_.at(static_cast<std::size_t>(request.label));
    std::vector<Sample> out(request.count);
    for (std::size_t i = 0; i < request.count; ++i) {
      auto& s = out[i];
      s.label = request.label;
      s.features = mean;
      if (!request.prompts.empty() && jitter_ > 0.0) {
        const auto offset = template_offset(request.prompts[i].template_id, request.label);
        for (std::size_t j = 0; j < s.features.size(); ++j) s.features[j] += offset[j];
      }
      for (auto& f : s.features) f += stddev_ * rng.normal();
    }
    return out;
  }

  /// Mean shift attached to a (template, class) pair.
  std::vector<double> template_offset(std::uint64_t template_id, int label) const {
    Rng r(derive_seed(jitter_seed_, "template-jitter", {template_id, static_cast<std::uint64_t>(label)}));
    std::vector<double> dir(sample_dim());
    double norm = 0.0;
    for (auto& d : dir) {
      d = r.normal();
      norm += d * d;
    }
    norm = std::sqrt(norm);
    for (auto& d : dir) d = norm > 0.0 ? jitter_ * d / norm : 0.0;
    return dir;
  }

 private:
  std::vector<std::vector<double>> means_;
  double stddev_;
  double jitter_;
  std::uint64_t jitter_seed_;
};

}  // namespace fedsd
