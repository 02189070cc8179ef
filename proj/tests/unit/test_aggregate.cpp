#include <gtest/gtest.h>

#include "fedsd/aggregate.hpp"
#include "support/oracles.hpp"

using namespace fedsd;

namespace {

const ParamLayout kLayout{{"w", 3, 2}, {"b", 3, 1}};

struct Instance {
  std::vector<ClientUpdate> updates;
  ParamVector global;
  ParamVector c_global;
  std::vector<std::vector<double>> thetas, deltas;
  std::vector<double> sizes, taus;
};

std::vector<double> values(const ParamVector& p) { return {p.values().begin(), p.values().end()}; }

ParamVector random_params(Rng& rng, double scale = 1.0) {
  ParamVector p(kLayout);
  for (auto& v : p.values()) v = scale * rng.normal();
  return p;
}

Instance random_instance(Rng& rng) {
  Instance in;
  in.global = random_params(rng);
  in.c_global = random_params(rng, 0.1);
  const std::size_t k = 3 + rng.below(3);
  for (std::size_t i = 0; i < k; ++i) {
    ClientUpdate u;
    u.params = random_params(rng);
    u.num_samples = 1 + rng.below(2000);
    u.local_steps = 1 + rng.below(300);
    u.cv_delta = random_params(rng, 0.1);
    in.thetas.push_back(values(u.params));
    in.deltas.push_back(values(*u.cv_delta));
    in.sizes.push_back(static_cast<double>(u.num_samples));
    in.taus.push_back(static_cast<double>(u.local_steps));
    in.updates.push_back(std::move(u));
  }
  return in;
}

void expect_close(const ParamVector& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(got[i], want[i], tol) << "index " << i;
}

}  // namespace

TEST(FedAvg, MatchesScalarOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_instance(rng);
    expect_close(aggregate_fedavg(in.updates), oracle::fedavg(in.thetas, in.sizes), 1e-12);
  }
}

TEST(FedNova, MatchesScalarOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_instance(rng);
    expect_close(aggregate_fednova(in.updates, in.global), oracle::fednova(values(in.global), in.thetas, in.sizes, in.taus),
                 1e-12);
  }
}

TEST(Scaffold, MatchesScalarOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_instance(rng);
    const double lr = trial % 2 == 0 ? 1.0 : 0.1 + rng.uniform();
    const std::size_t n = in.updates.size() + rng.below(20);
    const auto got = aggregate_scaffold(in.updates, in.global, in.c_global, lr, n);
    const auto [theta, c] =
        oracle::scaffold(values(in.global), values(in.c_global), in.thetas, in.deltas, lr, static_cast<double>(n));
    expect_close(got.params, theta, 1e-12);
    expect_close(got.c_global, c, 1e-12);
  }
}

TEST(FedAvg, WeightsByLocalDatasetSize) {
  ParamVector a(ParamLayout{{"x", 1, 1}}, 0.0), b(ParamLayout{{"x", 1, 1}}, 4.0);
  std::vector<ClientUpdate> u{{a, 1, 1, {}, 0.0}, {b, 3, 1, {}, 0.0}};
  EXPECT_DOUBLE_EQ(aggregate_fedavg(u)[0], 3.0);
}

TEST(FedNova, EqualStepsAreBitIdenticalToFedAvg) {
  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    auto in = random_instance(rng);
    const std::size_t tau = 1 + rng.below(500);
    for (auto& u : in.updates) u.local_steps = tau;
    const auto c = fednova_coefficients(in.updates);
    ASSERT_EQ(c.client, fedavg_weights(in.updates)) << "trial " << trial;
    ASSERT_EQ(c.global, 0.0);
    ASSERT_EQ(aggregate_fednova(in.updates, in.global), aggregate_fedavg(in.updates));
  }
}

TEST(FedNova, UnequalStepsRescaleDeltas) {
  // Two equal-size clients, tau = 1 and 3: tau_eff = 2,
  // theta' = g - 2 * (0.5 (g - t1) / 1 + 0.5 (g - t2) / 3)
  const ParamLayout l{{"x", 1, 1}};
  ParamVector g(l, 1.0), t1(l, 0.0), t2(l, -2.0);
  std::vector<ClientUpdate> u{{t1, 10, 1, {}, 0.0}, {t2, 10, 3, {}, 0.0}};
  EXPECT_NEAR(aggregate_fednova(u, g)[0], 1.0 - 2.0 * (0.5 * 1.0 + 0.5 * 3.0 / 3.0), 1e-15);
  const auto c = fednova_coefficients(u);
  EXPECT_DOUBLE_EQ(c.client[0], 1.0);
  EXPECT_DOUBLE_EQ(c.client[1], 1.0 / 3.0);
  EXPECT_NEAR(c.global, 1.0 - 4.0 / 3.0, 1e-15);
}

TEST(Scaffold, UnitServerRateIsThePlainMean) {
  Rng rng(5);
  auto in = random_instance(rng);
  for (auto& u : in.updates) u.num_samples = 7;
  const auto s = aggregate_scaffold(in.updates, in.global, in.c_global, 1.0, 100);
  EXPECT_EQ(s.params, aggregate_fedavg(in.updates));
}

TEST(Scaffold, ControlVariateMovesByParticipationFraction) {
  const ParamLayout l{{"x", 1, 1}};
  ParamVector g(l, 0.0), c(l, 1.0), d1(l, 2.0), d2(l, 4.0);
  std::vector<ClientUpdate> u{{g, 1, 1, d1, 0.0}, {g, 1, 1, d2, 0.0}};
  EXPECT_DOUBLE_EQ(aggregate_scaffold(u, g, c, 1.0, 10).c_global[0], 1.0 + 0.2 * 3.0);
}

TEST(Aggregate, RejectsMalformedUpdates) {
  const ParamLayout l{{"x", 2, 1}};
  ParamVector g(l), other(ParamLayout{{"y", 2, 1}});
  EXPECT_THROW(aggregate_fedavg(std::vector<ClientUpdate>{}), DataError);
  EXPECT_THROW(aggregate_fedavg(std::vector<ClientUpdate>{{g, 1, 1, {}, 0}, {other, 1, 1, {}, 0}}), DataError);
  EXPECT_THROW(aggregate_fedavg(std::vector<ClientUpdate>{{g, 0, 1, {}, 0}}), DataError);
  EXPECT_THROW(aggregate_fednova(std::vector<ClientUpdate>{{g, 1, 0, {}, 0}}, g), DataError);
  EXPECT_THROW(aggregate_scaffold(std::vector<ClientUpdate>{{g, 1, 1, {}, 0}}, g, g, 1.0, 1), DataError);
}
