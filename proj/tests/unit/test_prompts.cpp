#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "fedsd/prompts.hpp"
#include "support/oracles.hpp"

using namespace fedsd;

namespace {

std::size_t occurrences(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

}  // namespace

TEST(RenderFixed, Examples) {
  EXPECT_EQ(render_fixed("cat"), "a photo of a cat.");
  EXPECT_EQ(render_fixed("dog"), "a photo of a dog.");
  EXPECT_THROW(render_fixed(""), ConfigError);
}

TEST(RenderFixed, EveryCifarClassAppearsOnce) {
  for (const auto& name : cifar10_class_names()) {
    const auto p = render_fixed(name);
    EXPECT_EQ(occurrences(p, name), 1u) << p;
    EXPECT_EQ(p.find("{class}"), std::string::npos);
  }
}

TEST(PromptPool, DefaultPoolHasEighteenTemplates) {
  const auto pool = default_prompt_pool();
  ASSERT_EQ(pool.size(), 18u);
  EXPECT_EQ(pool[0].pattern(), "a photo of a {class}.");
  EXPECT_EQ(pool[1].pattern(), "a blurry photo of a {class}.");
  EXPECT_EQ(pool[17].pattern(), "a photo of the big {class}.");
}

TEST(PromptPool, RejectsMalformedTemplates) {
  EXPECT_THROW(PromptTemplate(""), ConfigError);
  EXPECT_THROW(PromptTemplate("a photo"), ConfigError);
  EXPECT_THROW(PromptTemplate("{class} and {class}"), ConfigError);
  EXPECT_THROW(PromptPool({}), ConfigError);
  EXPECT_THROW(PromptPool({PromptTemplate("a {class}"), PromptTemplate("a {class}")}), ConfigError);
}

TEST(RenderDiverse, SingletonPoolMatchesItsTemplate) {
  PromptPool pool({PromptTemplate("a photo of a {class}.")});
  Rng rng(3);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(render_diverse("cat", pool, rng), render_fixed("cat"));
}

TEST(RenderDiverse, UniformOverTheDefaultPool) {
  const auto pool = default_prompt_pool();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < pool.size(); ++i) index[pool[i].render("ship")] = i;
  const double sigma = std::sqrt(18000.0 * (1.0 / 18.0) * (17.0 / 18.0));
  // All 18 counts land inside a 3-sigma band with probability 0.9973^18 = 0.952
  // per run, so check the band rate across seeds plus the mean chi-square.
  int inside = 0;
  double chi_sum = 0.0;
  const int runs = 200;
  for (int seed = 0; seed < runs; ++seed) {
    std::vector<std::size_t> counts(pool.size(), 0);
    Rng rng(static_cast<std::uint64_t>(seed));
    for (int i = 0; i < 18000; ++i) ++counts.at(index.at(render_diverse("ship", pool, rng)));
    bool ok = true;
    for (auto c : counts) ok = ok && std::abs(static_cast<double>(c) - 1000.0) <= 3.0 * sigma;
    inside += ok ? 1 : 0;
    chi_sum += oracle::chi_square_uniform(counts);
  }
  EXPECT_GE(inside, 180);
  // 17 dof: mean 17, sd of the mean sqrt(34 / 200) = 0.41
  EXPECT_NEAR(chi_sum / runs, 17.0, 1.65);
}

TEST(RenderDiverse, ReproducibleUnderSeed) {
  const auto pool = default_prompt_pool();
  Rng a(7), b(7);
  for (int i = 0; i < 50; ++i) ASSERT_EQ(render_diverse("frog", pool, a), render_diverse("frog", pool, b));
}

TEST(PromptRenderer, FixedAndDiverseDesigns) {
  PromptRenderer fixed({"cat", "dog"}, PromptDesign::fixed);
  PromptRenderer diverse({"cat", "dog"}, PromptDesign::diverse);
  Rng rng(1);
  const auto f = fixed.render(1, 20, rng);
  ASSERT_EQ(f.size(), 20u);
  for (const auto& p : f) EXPECT_EQ(p.text, "a photo of a dog.");
  const auto d = diverse.render(0, 200, rng);
  std::set<std::string> distinct;
  for (const auto& p : d) {
    EXPECT_EQ(occurrences(p.text, "cat"), 1u);
    distinct.insert(p.text);
  }
  EXPECT_GT(distinct.size(), 10u);
  EXPECT_THROW(fixed.render(2, 1, rng), ConfigError);
}

TEST(PromptPool, LoadsOneTemplatePerLine) {
  const auto path = std::filesystem::temp_directory_path() / "fedsd_pool.txt";
  {
    std::ofstream out(path);
    out << "a photo of a {class}.\r\n\n  itap of a {class}.  \n";
  }
  const auto pool = load_prompt_pool(path);
  ASSERT_EQ(pool.size(), 2u);
  EXPECT_EQ(pool[1].render("cat"), "itap of a cat.");
  std::filesystem::remove(path);
  EXPECT_THROW(load_prompt_pool(path), ConfigError);
}

TEST(PromptPool, ShippedPoolFileMatchesBuiltIn) {
  const auto pool = load_prompt_pool(std::filesystem::path(FEDSD_SOURCE_DIR) / "configs" / "prompt_pool.txt");
  ASSERT_EQ(pool.size(), default_prompt_pool().size());
  for (std::size_t i = 0; i < pool.size(); ++i) EXPECT_EQ(pool[i], default_prompt_pool()[i]);
}
