#include <gtest/gtest.h>

#include <set>

#include "fedsd/blobs.hpp"
#include "fedsd/federation.hpp"
#include "fedsd/partition.hpp"

using namespace fedsd;

namespace {

struct Smoke {
  LabeledDataset train, test;
  std::vector<LabeledDataset> clients;
  FederationSetup setup;
};

/// 4 clients with equal-size shards so FedAvg weights are exactly 1/4.
Smoke smoke(Algorithm algo = Algorithm::fedavg, std::size_t rounds = 3) {
  const BlobsSpec spec{4, 2, 3.0, 0.8, {}};
  Smoke s{make_blobs(spec, 40, 1), make_blobs(spec, 25, 2), {}, {}};
  for (int k = 0; k < 4; ++k) {
    LabeledDataset shard(2, 4);
    for (std::size_t i = static_cast<std::size_t>(k); i < s.train.size(); i += 4) shard.add(s.train[i]);
    s.clients.push_back(std::move(shard));
  }
  s.setup.model = {ModelKind::mlp, 2, 4, 8};
  s.setup.federation.num_clients = 4;
  s.setup.federation.sample_rate = 1.0;
  s.setup.federation.rounds = rounds;
  s.setup.federation.seed = 11;
  s.setup.local = {10, 8, algo, 0.0};
  s.setup.optimizer.lr = 1e-2;
  return s;
}

}  // namespace

TEST(FederationConfig, ClientsPerRoundIsCeiling) {
  FederationConfig c;
  c.num_clients = 100;
  c.sample_rate = 0.1;
  EXPECT_EQ(c.clients_per_round(), 10u);
  c.num_clients = 20;
  c.sample_rate = 0.3;
  EXPECT_EQ(c.clients_per_round(), 6u);
  c.sample_rate = 0.01;
  EXPECT_EQ(c.clients_per_round(), 1u);
  c.num_clients = 7;
  c.sample_rate = 0.5;
  EXPECT_EQ(c.clients_per_round(), 4u);
}

TEST(FederationConfig, ValidationNamesTheField) {
  FederationConfig c;
  c.sample_rate = 0.0;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "federation.sample_rate");
  }
}

TEST(SampleClients, SizeDistinctSortedAndUniform) {
  std::vector<std::size_t> hits(20, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    Rng rng(seed);
    const auto s = sample_clients(20, 0.25, rng);
    ASSERT_EQ(s.size(), 5u);
    ASSERT_TRUE(std::is_sorted(s.begin(), s.end()));
    ASSERT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 5u);
    for (auto k : s) ++hits[k];
  }
  // each client is picked with probability 1/4: 1000 expected, sd 27
  for (auto h : hits) EXPECT_NEAR(static_cast<double>(h), 1000.0, 5 * 27.4);
}

TEST(RunFederation, DeterministicAndIndependentOfWorkerCount) {
  auto a = smoke(Algorithm::fedavg, 4);
  auto b = smoke(Algorithm::fedavg, 4);
  b.setup.federation.workers = 3;
  const auto ra = run_federation(a.setup, a.clients, a.test);
  const auto rb = run_federation(b.setup, b.clients, b.test);
  EXPECT_EQ(ra.final_params, rb.final_params);
  ASSERT_EQ(ra.records.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(ra.records[r].test_accuracy, rb.records[r].test_accuracy);
    EXPECT_EQ(ra.records[r].round, r + 1);
  }
}

TEST(RunFederation, DegenerateAlgorithmsMatchFedAvgBitForBit) {
  auto base = smoke(Algorithm::fedavg, 5);
  const auto ref = run_federation(base.setup, base.clients, base.test);

  auto prox = smoke(Algorithm::fedprox, 5);
  prox.setup.local.mu = 0.0;
  EXPECT_EQ(run_federation(prox.setup, prox.clients, prox.test).final_params, ref.final_params);

  auto nova = smoke(Algorithm::fednova, 5);
  EXPECT_EQ(run_federation(nova.setup, nova.clients, nova.test).final_params, ref.final_params);

  // control variates start at zero but become non-zero after round 1
  auto one = smoke(Algorithm::fedavg, 1);
  auto sc = smoke(Algorithm::scaffold, 1);
  EXPECT_EQ(run_federation(sc.setup, sc.clients, sc.test).final_params,
            run_federation(one.setup, one.clients, one.test).final_params);
}

TEST(RunFederation, CommunicationPerRecord) {
  auto s = smoke();
  s.setup.federation.sample_rate = 0.5;
  const auto r = run_federation(s.setup, s.clients, s.test);
  const std::uint64_t P = s.setup.model.param_count();
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.selected.size(), 2u);
    EXPECT_EQ(rec.bytes_down, 2 * P * 4);
    EXPECT_EQ(rec.bytes_up, 2 * P * 4);
    EXPECT_EQ(rec.bytes_up + rec.bytes_down, bytes_per_round(r.comm));
  }
}

TEST(RunFederation, LearnsSeparableBlobs) {
  auto s = smoke(Algorithm::fedavg, 30);
  const auto r = run_federation(s.setup, s.clients, s.test);
  EXPECT_GT(r.records.back().test_accuracy, 0.9);
}

TEST(RunFederation, AugmentationBalancesEveryClient) {
  const BlobsSpec spec{5, 2, 3.0, 0.5, {}};
  const auto train = make_blobs(spec, 60, 1);
  const auto parts = dirichlet_partition(train, {6, 0.1, 4});
  std::vector<LabeledDataset> clients;
  for (const auto& p : parts) clients.push_back(train.subset(p));
  FederationSetup setup;
  setup.model = {ModelKind::linear, 2, 5, 0};
  setup.federation.num_clients = 6;
  setup.federation.sample_rate = 0.5;
  setup.federation.rounds = 2;
  setup.local = {5, 16, Algorithm::fedavg, 0.0};
  PoolGenerator gen(make_blobs(spec, 400, 2));
  const auto r = run_federation(setup, clients, make_blobs(spec, 10, 3), {&gen, nullptr, false});
  for (const auto& h : r.client_histograms) {
    const auto& c = h.counts();
    EXPECT_EQ(std::set<std::size_t>(c.begin(), c.end()).size(), 1u);
  }
}

TEST(RunFederation, FailuresNameRoundAndClient) {
  auto s = smoke();
  s.clients[2] = LabeledDataset(2, 4);
  try {
    run_federation(s.setup, s.clients, s.test);
    FAIL();
  } catch (const FederationError& e) {
    EXPECT_EQ(e.client(), 2u);
    EXPECT_EQ(e.round(), 0u);
  }
  auto t = smoke();
  t.clients.pop_back();
  EXPECT_THROW(run_federation(t.setup, t.clients, t.test), ConfigError);
}

TEST(RunFederation, CallbackSeesEveryRound) {
  auto s = smoke(Algorithm::fednova, 3);
  std::vector<std::size_t> seen;
  run_federation(s.setup, s.clients, s.test, {}, [&](const RoundRecord& r) { seen.push_back(r.round); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3}));
}
