#include <gtest/gtest.h>

#include "fedsd/metrics.hpp"

using namespace fedsd;

namespace {

std::vector<RoundRecord> series(const std::vector<double>& acc) {
  std::vector<RoundRecord> r;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    RoundRecord rec;
    rec.round = i + 1;
    rec.test_accuracy = acc[i];
    r.push_back(rec);
  }
  return r;
}

const CommModel kTable4{283723, 4, 10, 2, false};

}  // namespace

TEST(FinalAccuracy, ConstantAndArithmeticSeries) {
  EXPECT_DOUBLE_EQ(final_accuracy(series(std::vector<double>(12, 0.5))), 0.5);
  EXPECT_NEAR(final_accuracy(series({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0})), 0.55, 1e-15);
  EXPECT_THROW(final_accuracy(series({0.1, 0.2})), DataError);
  EXPECT_THROW(final_accuracy(series({0.1}), 0), DataError);
}

TEST(FinalAccuracy, MatchesBruteForceOverLongSeries) {
  std::vector<double> acc;
  for (int i = 0; i < 100; ++i) acc.push_back(std::sin(0.37 * i) * 0.4 + 0.5);
  double brute = 0.0;
  for (int i = 90; i < 100; ++i) brute += acc[static_cast<std::size_t>(i)];
  EXPECT_NEAR(final_accuracy(series(acc)), brute / 10.0, 1e-15);
  EXPECT_NEAR(final_accuracy(series(acc), 100), [&] {
    double s = 0.0;
    for (double a : acc) s += a;
    return s / 100.0;
  }(), 1e-14);
}

TEST(BytesPerRound, TableFourUnit) {
  EXPECT_EQ(bytes_per_round(kTable4), 22697840u);
  EXPECT_NEAR(to_megabytes(bytes_per_round(kTable4)), 22.69, 0.01);
  EXPECT_EQ(bytes_per_round(CommModel{1, 4, 1, 1, false}), 4u);
}

TEST(BytesPerRound, LinearInEveryFactor) {
  const CommModel base{1000, 4, 5, 1, false};
  const auto b = bytes_per_round(base);
  auto m = base;
  m.param_count *= 2;
  EXPECT_EQ(bytes_per_round(m), 2 * b);
  m = base;
  m.bytes_per_param *= 2;
  EXPECT_EQ(bytes_per_round(m), 2 * b);
  m = base;
  m.clients_per_round *= 2;
  EXPECT_EQ(bytes_per_round(m), 2 * b);
  m = base;
  m.directions *= 2;
  EXPECT_EQ(bytes_per_round(m), 2 * b);
  m = base;
  m.include_control_variates = true;
  EXPECT_EQ(bytes_per_round(m), 2 * b);
}

TEST(BytesPerRound, RejectsInvalidModels) {
  EXPECT_THROW(bytes_per_round(CommModel{0, 4, 1, 2, false}), ConfigError);
  EXPECT_THROW(bytes_per_round(CommModel{1, 4, 1, 3, false}), ConfigError);
  EXPECT_THROW(bytes_per_round(CommModel{1, 4, 0, 2, false}), ConfigError);
}

TEST(CommToTarget, TableFourVanillaRowIsTwentyFiveRounds) {
  EXPECT_NEAR(567.44 / to_megabytes(bytes_per_round(kTable4)), 25.0, 0.001);
  std::vector<double> acc(40);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = i < 24 ? 0.1 + 0.005 * static_cast<double>(i) : 0.3;
  const auto hit = comm_to_target(series(acc), 0.25, kTable4);
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(hit->rounds, 25u);
  EXPECT_EQ(hit->bytes, 25u * 22697840u);
  EXPECT_NEAR(to_megabytes(hit->bytes), 567.44, 567.44 * 5e-4);
}

TEST(CommToTarget, ImmediateAndUnreachable) {
  const auto s = series({0.4, 0.5, 0.6});
  const auto first = comm_to_target(s, 0.1, kTable4);
  ASSERT_TRUE(first);
  EXPECT_EQ(first->rounds, 1u);
  EXPECT_EQ(first->bytes, bytes_per_round(kTable4));
  EXPECT_FALSE(comm_to_target(s, 1.1, kTable4).has_value());
}

TEST(CommToTarget, LowerTargetsNeverNeedMoreRounds) {
  std::vector<double> acc;
  for (int i = 0; i < 60; ++i) acc.push_back(0.5 + 0.4 * std::sin(0.2 * i) * (i / 60.0));
  const auto s = series(acc);
  std::size_t prev = 0;
  for (double target = 0.0; target <= 1.0; target += 0.01) {
    const auto r = rounds_to_target(s, target);
    if (!r) break;
    EXPECT_GE(*r, prev);
    prev = *r;
  }
}

TEST(MeanStd, SampleStandardDeviation) {
  const auto r = mean_std({0.2, 0.4, 0.6});
  EXPECT_NEAR(r.mean, 0.4, 1e-15);
  EXPECT_NEAR(r.stddev, 0.2, 1e-15);
  EXPECT_EQ(mean_std({0.3}).stddev, 0.0);
}

TEST(MarkdownReport, BaselineByVariantAgainstHeterogeneity) {
  std::vector<ReportEntry> e{
      {"FedAvg", "Vanilla", "Dir(0.5)", {0.2592, 0.0051}, 567.44},
      {"FedAvg", "Vanilla", "Dir(0.1)", {0.2, 0.0}, std::nullopt},
      {"FedAvg", "+Gen-FedSD", "Dir(0.5)", {0.4, 0.01}, 22.69784},
  };
  const auto md = markdown_report(e);
  EXPECT_NE(md.find("| Baseline | Variant | Dir(0.5) | Dir(0.1) |"), std::string::npos);
  EXPECT_NE(md.find("| FedAvg | Vanilla | 25.92 ± 0.51 | 20.00 ± 0.00 |"), std::string::npos);
  EXPECT_NE(md.find("| FedAvg | +Gen-FedSD | 40.00 ± 1.00 | - |"), std::string::npos);
  EXPECT_NE(md.find("| FedAvg | Vanilla | 567.44 MB | not reached |"), std::string::npos);
  EXPECT_NE(md.find("| FedAvg | +Gen-FedSD | 22.70 MB | - |"), std::string::npos);
}
