#pragma once

// Synchronous federated training: per round the server samples clients,
// broadcasts the global model, collects every selected client's update and
// aggregates with the configured rule.

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedsd/aggregate.hpp"
#include "fedsd/dataset.hpp"
#include "fedsd/error.hpp"
#include "fedsd/generator.hpp"
#include "fedsd/local_train.hpp"
#include "fedsd/metrics.hpp"
#include "fedsd/model.hpp"
#include "fedsd/optim.hpp"
#include "fedsd/parallel.hpp"
#include "fedsd/planner.hpp"
#include "fedsd/prompts.hpp"
#include "fedsd/rng.hpp"

namespace fedsd {

struct FederationConfig {
  std::size_t num_clients = 100;
  double sample_rate = 0.1;
  std::size_t rounds = 100;
  double server_lr = 1.0;  // Scaffold global step size
  std::size_t workers = 1;
  std::uint64_t seed = 0;

  /// ceil(C * N), guarded against representation error in C.
  std::size_t clients_per_round() const noexcept {
    const double raw = sample_rate * static_cast<double>(num_clients);
    const auto m = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(m, 1, num_clients);
  }

  void validate(const std::string& path = "federation") const {
    if (num_clients == 0) throw ConfigError(path + ".num_clients", "must be at least 1");
    if (!(sample_rate > 0.0 && sample_rate <= 1.0)) throw ConfigError(path + ".sample_rate", "must lie in (0, 1]");
    if (rounds == 0) throw ConfigError(path + ".rounds", "must be at least 1");
    if (!(server_lr > 0.0) || !std::isfinite(server_lr)) throw ConfigError(path + ".server_lr", "must be positive");
    if (workers == 0) throw ConfigError(path + ".workers", "must be at least 1");
  }
};

/// Uniform subset of size ceil(C * N) without replacement, ascending.
inline std::vector<std::size_t> sample_clients(std::size_t num_clients, double sample_rate, Rng& rng) {
  FederationConfig c;
  c.num_clients = num_clients;
  c.sample_rate = sample_rate;
  c.validate();
  const std::size_t m = c.clients_per_round();
  std::vector<std::size_t> ids(num_clients);
  for (std::size_t i = 0; i < num_clients; ++i) ids[i] = i;
  for (std::size_t i = 0; i < m; ++i) std::swap(ids[i], ids[i + rng.below(num_clients - i)]);
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// A client failure tagged with where it happened.
class FederationError : public std::runtime_error {
 public:
  FederationError(std::size_t round, std::size_t client, const std::string& what)
      : std::runtime_error("round " + std::to_string(round) + ", client " + std::to_string(client) + ": " + what),
        round_(round),
        client_(client) {}

  std::size_t round() const noexcept { return round_; }
  std::size_t client() const noexcept { return client_; }

 private:
  std::size_t round_;
  std::size_t client_;
};

struct FederationSetup {
  ModelSpec model;
  FederationConfig federation;
  LocalTrainConfig local;
  OptimizerConfig optimizer;
  /// Only bytes_per_param, directions and include_control_variates are
  /// read; parameter and client counts come from the model and config.
  CommModel comm;
};

/// Pre-federation data synthesis. Without a generator no augmentation runs.
struct AugmentationSetup {
  const Generator* generator = nullptr;
  const PromptRenderer* prompts = nullptr;
  bool parallel = false;
};

struct FederationResult {
  std::vector<RoundRecord> records;
  ParamVector final_params;
  std::vector<LabelHistogram> client_histograms;  // after augmentation
  CommModel comm;
};

using RoundCallback = std::function<void(const RoundRecord&)>;

inline CommModel effective_comm_model(const FederationSetup& setup) {
  CommModel m = setup.comm;
  m.param_count = setup.model.param_count();
  m.clients_per_round = setup.federation.clients_per_round();
  return m;
}

/// Augments every client once (if requested), then runs the configured
/// number of rounds, evaluating the global model on `test` after each.
/// The outcome is a pure function of the inputs and federation.seed.
inline FederationResult run_federation(const FederationSetup& setup, std::vector<LabeledDataset> clients,
                                       const LabeledDataset& test, const AugmentationSetup& augmentation = {},
                                       const RoundCallback& on_round = {}) {
  const auto& fc = setup.federation;
  fc.validate();
  setup.local.validate();
  setup.optimizer.validate();
  if (clients.size() != fc.num_clients)
    throw ConfigError("federation.num_clients", "config says " + std::to_string(fc.num_clients) + " clients, " +
                                                    std::to_string(clients.size()) + " datasets supplied");
  for (std::size_t k = 0; k < clients.size(); ++k)
    if (clients[k].empty()) throw FederationError(0, k, "client dataset is empty");

  if (augmentation.generator != nullptr) {
    AugmentOptions opts{augmentation.prompts, augmentation.parallel};
    for (std::size_t k = 0; k < clients.size(); ++k) {
      try {
        Rng gen_rng(derive_seed(fc.seed, "generation", {k}));
        clients[k] = augment(clients[k], build_plan(histogram(clients[k])), *augmentation.generator, gen_rng, opts);
      } catch (const std::exception& e) {
        throw FederationError(0, k, std::string("augmentation failed: ") + e.what());
      }
    }
  }

  FederationResult result;
  result.comm = effective_comm_model(setup);
  for (const auto& c : clients) result.client_histograms.push_back(histogram(c));

  Rng init_rng(derive_seed(fc.seed, "model-init"));
  ParamVector global = init_params(setup.model, init_rng);

  const bool scaffold = setup.local.algorithm == Algorithm::scaffold;
  ParamVector c_global(global.layout());
  std::vector<ParamVector> c_local;
  if (scaffold) c_local.assign(fc.num_clients, ParamVector(global.layout()));

  const std::uint64_t transfer = bytes_per_transfer(result.comm);

  for (std::size_t r = 1; r <= fc.rounds; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng select_rng(derive_seed(fc.seed, "client-sampling", {r}));
    const auto selected = sample_clients(fc.num_clients, fc.sample_rate, select_rng);

    std::vector<ClientUpdate> updates(selected.size());
    parallel_for(selected.size(), fc.workers, [&](std::size_t slot) {
      const std::size_t k = selected[slot];
      Rng train_rng(derive_seed(fc.seed, "client-train", {r, k}));
      std::optional<ControlVariates> cv;
      if (scaffold) cv = ControlVariates{c_global, c_local[k]};
      try {
        updates[slot] = local_train(setup.model, global, clients[k], setup.local, setup.optimizer,
                                    cv ? &*cv : nullptr, train_rng);
      } catch (const std::exception& e) {
        throw FederationError(r, k, e.what());
      }
    });

    switch (setup.local.algorithm) {
      case Algorithm::fedavg:
      case Algorithm::fedprox: global = aggregate_fedavg(updates); break;
      case Algorithm::fednova: global = aggregate_fednova(updates, global); break;
      case Algorithm::scaffold: {
        auto agg = aggregate_scaffold(updates, global, c_global, fc.server_lr, fc.num_clients);
        global = std::move(agg.params);
        c_global = std::move(agg.c_global);
        for (std::size_t slot = 0; slot < selected.size(); ++slot) {
          auto& c = c_local[selected[slot]];
          const auto& d = *updates[slot].cv_delta;
          for (std::size_t i = 0; i < c.size(); ++i) c[i] += d[i];
        }
        break;
      }
    }

    RoundRecord rec;
    rec.round = r;
    rec.selected = selected;
    try {
      const auto eval = forward_loss(setup.model, global, test);
      rec.test_accuracy = static_cast<double>(eval.correct) / static_cast<double>(test.size());
      rec.test_loss = eval.loss;
    } catch (const DivergenceError&) {
      throw FederationError(r, selected.front(), "global model diverged after aggregation");
    }
    rec.bytes_down = selected.size() * transfer;
    rec.bytes_up = result.comm.directions > 1 ? selected.size() * transfer : 0;
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (on_round) on_round(rec);
    result.records.push_back(std::move(rec));
  }
  result.final_params = std::move(global);
  return result;
}

}  // namespace fedsd
