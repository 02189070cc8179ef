#include <gtest/gtest.h>

#include <atomic>
#include <numeric>

#include "fedsd/blobs.hpp"
#include "fedsd/generator.hpp"
#include "fedsd/partition.hpp"
#include "fedsd/planner.hpp"

using namespace fedsd;

namespace {

LabeledDataset with_counts(const std::vector<std::size_t>& counts) {
  LabeledDataset d(2, counts.size());
  for (std::size_t y = 0; y < counts.size(); ++y)
    for (std::size_t i = 0; i < counts[y]; ++i)
      d.add({{static_cast<double>(y), static_cast<double>(i)}, static_cast<int>(y)});
  return d;
}

class FailingGenerator final : public Generator {
 public:
  explicit FailingGenerator(int bad) : bad_(bad) {}
  std::size_t sample_dim() const override { return 2; }
  bool supports(int) const override { return true; }
  std::vector<Sample> generate(const GenerationRequest& r, Rng&) const override {
    if (r.label == bad_) throw std::runtime_error("backend down");
    return std::vector<Sample>(r.count, Sample{{0.0, 0.0}, r.label});
  }

 private:
  int bad_;
};

}  // namespace

TEST(ComputeNmax, Examples) {
  EXPECT_EQ(compute_nmax(LabelHistogram({250, 100, 0})), 250u);
  EXPECT_EQ(compute_nmax(LabelHistogram({7, 7, 7})), 7u);
  EXPECT_THROW(compute_nmax(LabelHistogram({0, 0, 0})), DataError);
}

TEST(ComputeNmax, EqualsLinearScanMaximum) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> c(1 + rng.below(12));
    for (auto& v : c) v = rng.below(500);
    c[rng.below(c.size())] += 1;
    std::size_t m = 0;
    for (auto v : c)
      if (v > m) m = v;
    ASSERT_EQ(compute_nmax(LabelHistogram(c)), m);
  }
}

TEST(BuildPlan, CatsDogsFrogs) {
  const auto plan = build_plan(LabelHistogram({250, 100, 0}));
  EXPECT_EQ(plan.n_max, 250u);
  EXPECT_EQ(plan.quotas, (std::vector<std::size_t>{0, 150, 250}));
}

TEST(BuildPlan, BalancedNeedsNothing) {
  const auto plan = build_plan(LabelHistogram({9, 9, 9, 9}));
  EXPECT_EQ(plan.total(), 0u);
}

TEST(BuildPlan, RandomHistogramsBecomeUniform) {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::size_t> c(2 + rng.below(10));
    for (auto& v : c) v = rng.below(3) == 0 ? 0 : rng.below(300);
    c[0] += 1;
    const LabelHistogram h(c);
    const auto plan = build_plan(h);
    std::size_t local = 0, quota = 0;
    for (std::size_t y = 0; y < c.size(); ++y) {
      ASSERT_EQ(c[y] + plan.quotas[y], plan.n_max);
      local += c[y];
      quota += plan.quotas[y];
    }
    ASSERT_EQ(quota, c.size() * plan.n_max - local);
    ASSERT_EQ(plan.total(), quota);
  }
}

TEST(BuildPlan, JsonShape) {
  const auto j = to_json(build_plan(LabelHistogram({250, 100, 0})));
  EXPECT_EQ(j.dump(), R"({"n_max":250,"quotas":[0,150,250]})");
  EXPECT_EQ(plan_from_json(j), build_plan(LabelHistogram({250, 100, 0})));
}

TEST(Augment, ZeroPlanIsIdentity) {
  const auto local = with_counts({5, 5});
  GaussianGenerator gen({{0, 0}, {1, 1}}, 1.0);
  Rng rng(1);
  const auto out = augment(local, build_plan(histogram(local)), gen, rng);
  EXPECT_EQ(out.samples(), local.samples());
  EXPECT_EQ(out.provenance(), Provenance::augmented);
}

TEST(Augment, WorkedExampleWithPool) {
  const auto local = with_counts({250, 100, 0});
  const auto reserve = make_blobs(BlobsSpec{3, 2, 3.0, 0.5, {}}, 500, 3);
  PoolGenerator gen(reserve);
  Rng rng(5);
  const auto out = augment(local, build_plan(histogram(local)), gen, rng);
  EXPECT_EQ(histogram(out).counts(), (std::vector<std::size_t>{250, 250, 250}));
  // local samples first, verbatim and in order
  for (std::size_t i = 0; i < local.size(); ++i) ASSERT_EQ(out[i], local[i]);
  // synthetic tail in class order
  for (std::size_t i = local.size(); i < local.size() + 150; ++i) ASSERT_EQ(out[i].label, 1);
  for (std::size_t i = local.size() + 150; i < out.size(); ++i) ASSERT_EQ(out[i].label, 2);
}

TEST(Augment, EveryClientOfADirichletSplitBecomesUniform) {
  const BlobsSpec spec{10, 2, 3.0, 1.0, {}};
  const auto data = make_blobs(spec, 100, 1);
  PoolGenerator gen(make_blobs(spec, 300, 2));
  const auto parts = dirichlet_partition(data, {20, 0.5, 8});
  Rng rng(3);
  for (const auto& idx : parts) {
    const auto local = data.subset(idx);
    const auto plan = build_plan(histogram(local));
    const auto out = augment(local, plan, gen, rng);
    const auto h = histogram(out);
    for (auto c : h.counts()) ASSERT_EQ(c, plan.n_max);
  }
}

TEST(Augment, ParallelAndSerialAgree) {
  const auto local = with_counts({30, 2, 0, 11});
  GaussianGenerator gen({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, 0.5);
  Rng a(10), b(10);
  const auto plan = build_plan(histogram(local));
  EXPECT_EQ(augment(local, plan, gen, a).samples(), augment(local, plan, gen, b, {nullptr, true}).samples());
}

TEST(Augment, GeneratorFailureNamesTheClass) {
  const auto local = with_counts({10, 3, 0});
  FailingGenerator gen(2);
  for (bool parallel : {false, true}) {
    Rng rng(1);
    try {
      augment(local, build_plan(histogram(local)), gen, rng, {nullptr, parallel});
      FAIL() << "expected GenerationError";
    } catch (const GenerationError& e) {
      EXPECT_EQ(e.label(), 2);
    }
  }
}

TEST(Augment, UnsupportedClassIsRejected) {
  const auto local = with_counts({10, 3, 0});
  GaussianGenerator gen({{0, 0}, {1, 1}}, 1.0);  // no class 2
  Rng rng(1);
  EXPECT_THROW(augment(local, build_plan(histogram(local)), gen, rng), GenerationError);
}

TEST(Augment, PromptsReachTheGenerator) {
  class Recorder final : public Generator {
   public:
    std::size_t sample_dim() const override { return 2; }
    bool supports(int) const override { return true; }
    std::vector<Sample> generate(const GenerationRequest& r, Rng&) const override {
      for (const auto& p : r.prompts)
        if (p.text.find(names[static_cast<std::size_t>(r.label)]) == std::string::npos) ++bad;
      seen += r.prompts.size();
      return std::vector<Sample>(r.count, Sample{{0.0, 0.0}, r.label});
    }
    std::vector<std::string> names{"cat", "dog", "frog"};
    mutable std::atomic<int> bad{0};
    mutable std::atomic<std::size_t> seen{0};
  } gen;
  const auto local = with_counts({250, 100, 0});
  PromptRenderer prompts({"cat", "dog", "frog"}, PromptDesign::fixed);
  Rng rng(2);
  augment(local, build_plan(histogram(local)), gen, rng, {&prompts, false});
  EXPECT_EQ(gen.seen.load(), 400u);
  EXPECT_EQ(gen.bad.load(), 0);
}
