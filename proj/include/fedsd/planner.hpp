#pragma once

// Per-client synthesis planning: lift every class to the client's largest
// class count so the augmented local dataset is label-balanced.

#include <algorithm>
#include <future>
#include <numeric>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fedsd/dataset.hpp"
#include "fedsd/error.hpp"
#include "fedsd/generator.hpp"
#include "fedsd/prompts.hpp"
#include "fedsd/rng.hpp"

namespace fedsd {

struct GenerationPlan {
  std::vector<std::size_t> quotas;  // samples to synthesize per class
  std::size_t n_max = 0;

  std::size_t total() const noexcept {
    return std::accumulate(quotas.begin(), quotas.end(), std::size_t{0});
  }

  friend bool operator==(const GenerationPlan&, const GenerationPlan&) = default;
};

/// Largest per-class count. A client that owns no data has nothing to plan
/// around, so an all-zero histogram is rejected.
inline std::size_t compute_nmax(const LabelHistogram& hist) {
  const auto& c = hist.counts();
  const auto it = std::max_element(c.begin(), c.end());
  if (it == c.end() || *it == 0) throw DataError("compute_nmax: client owns no samples");
  return *it;
}

/// Owned and unowned classes alike get quota n_max - count (unowned classes
/// have count 0), so quotas[y] + counts[y] == n_max for every class.
inline GenerationPlan build_plan(const LabelHistogram& hist) {
  GenerationPlan plan;
  plan.n_max = compute_nmax(hist);
  plan.quotas.resize(hist.num_classes());
  for (std::size_t y = 0; y < hist.num_classes(); ++y) plan.quotas[y] = plan.n_max - hist[y];
  return plan;
}

inline nlohmann::json to_json(const GenerationPlan& plan) {
  return {{"n_max", plan.n_max}, {"quotas", plan.quotas}};
}

inline GenerationPlan plan_from_json(const nlohmann::json& j) {
  GenerationPlan plan;
  plan.n_max = j.at("n_max").get<std::size_t>();
  plan.quotas = j.at("quotas").get<std::vector<std::size_t>>();
  return plan;
}

struct AugmentOptions {
  /// Renders per-image prompts; without one, generators get no prompts.
  const PromptRenderer* prompts = nullptr;
  /// Run one generator call per class concurrently.
  bool parallel = false;
};

namespace detail {
inline std::vector<Prompt> class_prompts(std::uint64_t base, std::size_t y, std::size_t count,
                                         const PromptRenderer& prompts) {
  Rng prompt_rng(derive_seed(base, "augment/prompts", {y}));
  return prompts.render(static_cast<int>(y), count, prompt_rng);
}
}  // namespace detail

/// The prompts synthesize() hands the generator, per class, when called
/// with an RNG in the same state.
inline std::vector<std::vector<Prompt>> plan_prompts(const GenerationPlan& plan, const PromptRenderer& prompts,
                                                     Rng& rng) {
  const std::uint64_t base = rng.next_u64();
  std::vector<std::vector<Prompt>> out(plan.quotas.size());
  for (std::size_t y = 0; y < plan.quotas.size(); ++y)
    if (plan.quotas[y] > 0) out[y] = detail::class_prompts(base, y, plan.quotas[y], prompts);
  return out;
}

/// Synthetic samples for every class with a positive quota, in class order.
/// Each class uses its own RNG substream, so the result does not depend on
/// `options.parallel`.
inline LabeledDataset synthesize(const LabeledDataset& local, const GenerationPlan& plan,
                                 const Generator& generator, Rng& rng, const AugmentOptions& options = {}) {
  if (plan.quotas.size() != local.num_classes())
    throw DataError("plan has " + std::to_string(plan.quotas.size()) + " classes, dataset has " +
                    std::to_string(local.num_classes()));
  const std::uint64_t base = rng.next_u64();
  LabeledDataset syn(local.dim(), local.num_classes(), Provenance::synthetic);
  if (plan.total() == 0) return syn;
  if (generator.sample_dim() != local.dim())
    throw DataError("generator dimension " + std::to_string(generator.sample_dim()) +
                    " does not match dataset dimension " + std::to_string(local.dim()));

  auto run_class = [&](std::size_t y) -> std::vector<Sample> {
    const int label = static_cast<int>(y);
    try {
      GenerationRequest req{label, plan.quotas[y], {}};
      if (options.prompts != nullptr) req.prompts = detail::class_prompts(base, y, req.count, *options.prompts);
      Rng gen_rng(derive_seed(base, "augment/generate", {y}));
      return generate(generator, req, gen_rng);
    } catch (const GenerationError&) {
      throw;
    } catch (const std::exception& e) {
      throw GenerationError(label, 0, e.what());
    }
  };

  std::vector<std::vector<Sample>> per_class(plan.quotas.size());
  if (options.parallel) {
    std::vector<std::future<std::vector<Sample>>> jobs(plan.quotas.size());
    for (std::size_t y = 0; y < plan.quotas.size(); ++y)
      if (plan.quotas[y] > 0) jobs[y] = std::async(std::launch::async, run_class, y);
    std::optional<GenerationError> first_error;
    for (std::size_t y = 0; y < jobs.size(); ++y) {
      if (!jobs[y].valid()) continue;
      try {
        per_class[y] = jobs[y].get();
      } catch (const GenerationError& e) {
        if (!first_error) first_error = e;
      }
    }
    if (first_error) throw *first_error;
  } else {
    for (std::size_t y = 0; y < plan.quotas.size(); ++y)
      if (plan.quotas[y] > 0) per_class[y] = run_class(y);
  }

  syn.reserve(plan.total());
  for (auto& samples : per_class)
    for (auto& s : samples) syn.add(std::move(s));
  return syn;
}

/// D_aug = D_local followed by the synthesized samples. Either the whole
/// augmented dataset is returned or an exception naming the failing class.
inline LabeledDataset augment(const LabeledDataset& local, const GenerationPlan& plan,
                              const Generator& generator, Rng& rng, const AugmentOptions& options = {}) {
  auto syn = synthesize(local, plan, generator, rng, options);
  LabeledDataset out(local.dim(), local.num_classes(), Provenance::augmented);
  out.reserve(local.size() + syn.size());
  out.append(local);
  out.append(syn);
  return out;
}

}  // namespace fedsd
