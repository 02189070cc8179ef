#pragma once

// End-to-end pipeline behind the fedsd command line: data, partition,
// generator, federation and the files each step leaves behind.
//
// Output layout (see docs/formats.md):
//   <out>/partition/client-NNN.txt, partition.json       fedsd partition
//   <out>/plan/client-NNN.json, client-NNN.prompts.txt   fedsd plan
//   <out>/seed-<s>/records.csv, summary.json             fedsd run
//   <out>/summary.json                                   fedsd run (all seeds)

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsd/blobs.hpp"
#include "fedsd/checkpoint.hpp"
#include "fedsd/config.hpp"
#include "fedsd/dataset_io.hpp"
#include "fedsd/diffusion.hpp"
#include "fedsd/federation.hpp"
#include "fedsd/generator.hpp"
#include "fedsd/metrics.hpp"
#include "fedsd/partition.hpp"
#include "fedsd/planner.hpp"
#include "fedsd/remote_generator.hpp"

namespace fedsd {

struct ExperimentData {
  LabeledDataset train;
  LabeledDataset test;
  std::optional<LabeledDataset> reserve;
};

inline std::uint64_t federation_seed(std::uint64_t master) { return derive_seed(master, "federation"); }
inline std::uint64_t partition_seed(std::uint64_t master) { return derive_seed(master, "partition"); }

namespace experiment_detail {

inline std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string client_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "client-%03zu", k);
  return buf;
}

inline void check_shape(const LabeledDataset& d, const ExperimentConfig& cfg, const std::string& path) {
  if (d.num_classes() != cfg.num_classes())
    throw ConfigError(path, "file has " + std::to_string(d.num_classes()) + " classes, dataset.class_names lists " +
                                std::to_string(cfg.num_classes()));
}

inline std::vector<std::vector<double>> class_means(const LabeledDataset& d) {
  std::vector<std::vector<double>> means(d.num_classes(), std::vector<double>(d.dim(), 0.0));
  std::vector<std::size_t> n(d.num_classes(), 0);
  for (const auto& s : d) {
    auto& m = means[static_cast<std::size_t>(s.label)];
    for (std::size_t j = 0; j < d.dim(); ++j) m[j] += s.features[j];
    ++n[static_cast<std::size_t>(s.label)];
  }
  for (std::size_t y = 0; y < means.size(); ++y) {
    if (n[y] == 0) throw ConfigError("dataset.reserve", "reserve has no samples of class " + std::to_string(y));
    for (auto& v : means[y]) v /= static_cast<double>(n[y]);
  }
  return means;
}

/// Pooled within-class standard deviation per coordinate, averaged.
inline double pooled_stddev(const LabeledDataset& d, const std::vector<std::vector<double>>& means) {
  double ss = 0.0;
  for (const auto& s : d)
    for (std::size_t j = 0; j < d.dim(); ++j) {
      const double r = s.features[j] - means[static_cast<std::size_t>(s.label)][j];
      ss += r * r;
    }
  const double dof = static_cast<double>(d.size()) - static_cast<double>(d.num_classes());
  return dof > 0 ? std::sqrt(ss / (dof * static_cast<double>(d.dim()))) : 0.0;
}

inline std::string variant_name(const ExperimentConfig& cfg) {
  if (!cfg.augment) return "Vanilla";
  return cfg.prompt_design == PromptDesign::fixed ? "+Gen-FedSD (w/o diversity)" : "+Gen-FedSD";
}

inline std::string heterogeneity_name(double alpha) {
  std::ostringstream ss;
  ss << "Dir(" << alpha << ")";
  return ss.str();
}

}  // namespace experiment_detail

/// Train/test (and reserve, when one is configured) for a master seed.
inline ExperimentData load_data(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  using namespace experiment_detail;
  ExperimentData d;
  if (cfg.dataset.kind == DatasetKind::blobs) {
    const auto& b = cfg.dataset.blobs;
    d.train = make_blobs(b, cfg.dataset.train_per_class, derive_seed(master_seed, "data/train"));
    d.test = make_blobs(b, cfg.dataset.test_per_class, derive_seed(master_seed, "data/test"));
    if (cfg.dataset.reserve_per_class > 0)
      d.reserve = make_blobs(b, cfg.dataset.reserve_per_class, derive_seed(master_seed, "data/reserve"));
  } else {
    d.train = load_dataset(cfg.dataset.train);
    check_shape(d.train, cfg, "dataset.train");
    d.test = load_dataset(cfg.dataset.test);
    check_shape(d.test, cfg, "dataset.test");
    if (d.test.dim() != d.train.dim()) throw ConfigError("dataset.test", "dimension differs from dataset.train");
    if (!cfg.dataset.reserve.empty()) {
      d.reserve = load_dataset(cfg.dataset.reserve);
      check_shape(*d.reserve, cfg, "dataset.reserve");
      if (d.reserve->dim() != d.train.dim())
        throw ConfigError("dataset.reserve", "dimension differs from dataset.train");
    }
  }
  return d;
}

inline ClientIndices make_partition(const ExperimentConfig& cfg, const LabeledDataset& train, std::uint64_t master_seed) {
  return dirichlet_partition(train, PartitionSpec{cfg.num_clients, cfg.alpha, partition_seed(master_seed)});
}

inline BetaSchedule ddpm_schedule(const ExperimentConfig& cfg) {
  return BetaSchedule::linear(cfg.generator.ddpm.timesteps, cfg.generator.ddpm.beta_start, cfg.generator.ddpm.beta_end);
}

/// Trains the configured DDPM on the reserve.
inline DdpmTrainResult train_configured_ddpm(const ExperimentConfig& cfg, const ExperimentData& data,
                                             std::uint64_t master_seed) {
  if (!data.reserve || data.reserve->empty())
    throw ConfigError("dataset.reserve", "DDPM training needs a non-empty reserve");
  Rng rng(derive_seed(master_seed, "ddpm-train"));
  return train_ddpm(*data.reserve, ddpm_schedule(cfg), cfg.generator.ddpm.net, cfg.generator.ddpm.train, rng);
}

/// The configured generator, checked to cover every label at the data's
/// dimension. `log` receives one line per notable step.
inline std::unique_ptr<Generator> make_generator(const ExperimentConfig& cfg, const ExperimentData& data,
                                                 std::uint64_t master_seed, std::ostream* log = nullptr) {
  using namespace experiment_detail;
  const auto& g = cfg.generator;
  std::unique_ptr<Generator> gen;
  std::string dim_path = "generator.kind";
  switch (g.kind) {
    case GeneratorKind::pool:
      if (!data.reserve || data.reserve->empty())
        throw ConfigError("dataset.reserve", "the pool generator needs a non-empty reserve");
      gen = std::make_unique<PoolGenerator>(*data.reserve);
      break;
    case GeneratorKind::gaussian: {
      std::vector<std::vector<double>> means = g.gaussian.means;
      double stddev = g.gaussian.stddev.value_or(-1.0);
      if (means.empty() && cfg.dataset.kind == DatasetKind::blobs) means = blob_centers(cfg.dataset.blobs);
      if (means.empty()) {
        if (!data.reserve) throw ConfigError("generator.gaussian.means", "no means and no reserve to estimate them");
        means = class_means(*data.reserve);
      }
      if (stddev < 0.0) {
        if (cfg.dataset.kind == DatasetKind::blobs) stddev = cfg.dataset.blobs.spread;
        else if (data.reserve) stddev = pooled_stddev(*data.reserve, class_means(*data.reserve));
        else throw ConfigError("generator.gaussian.stddev", "no stddev and no reserve to estimate it");
      }
      gen = std::make_unique<GaussianGenerator>(std::move(means), stddev, g.gaussian.template_jitter,
                                                derive_seed(master_seed, "template-jitter"));
      dim_path = "generator.gaussian.means";
      break;
    }
    case GeneratorKind::ddpm: {
      if (!g.ddpm.checkpoint.empty()) {
        auto loaded = load_ddpm(g.ddpm.checkpoint);
        if (log) *log << "ddpm: loaded " << g.ddpm.checkpoint.string() << " (T=" << loaded.schedule.steps() << ")\n";
        if (loaded.model.spec().num_classes != cfg.num_classes())
          throw ConfigError("generator.ddpm.checkpoint", "checkpoint covers " +
                                                             std::to_string(loaded.model.spec().num_classes) +
                                                             " classes, dataset has " + std::to_string(cfg.num_classes()));
        gen = std::make_unique<DdpmGenerator>(std::move(loaded.model), std::move(loaded.schedule), g.ddpm.workers);
        dim_path = "generator.ddpm.checkpoint";
      } else {
        auto trained = train_configured_ddpm(cfg, data, master_seed);
        if (log)
          *log << "ddpm: trained " << trained.report.steps << " steps, running loss "
               << fmt("%.4f", trained.report.running_loss) << "\n";
        gen = std::make_unique<DdpmGenerator>(std::move(trained.model), ddpm_schedule(cfg), g.ddpm.workers);
      }
      break;
    }
    case GeneratorKind::remote: {
      auto remote = std::make_unique<RemoteGenerator>(g.remote);
      const auto h = remote->health();
      if (log) {
        if (h.http_status == 0) *log << "remote: " << g.remote.url << " unreachable\n";
        else *log << "remote: " << g.remote.url << " status " << h.status << " model " << h.model_id << "\n";
      }
      gen = std::move(remote);
      dim_path = "generator.remote.target_size";
      break;
    }
  }
  if (gen->sample_dim() != data.train.dim())
    throw ConfigError(dim_path, "generator produces dimension " + std::to_string(gen->sample_dim()) +
                                    ", dataset has " + std::to_string(data.train.dim()));
  for (std::size_t y = 0; y < cfg.num_classes(); ++y)
    if (!gen->supports(static_cast<int>(y)))
      throw ConfigError(dim_path, "generator does not cover class " + std::to_string(y));
  return gen;
}

inline PromptRenderer make_prompts(const ExperimentConfig& cfg) {
  return PromptRenderer(cfg.class_names(), cfg.prompt_design,
                        cfg.prompt_pool.empty() ? default_prompt_pool() : load_prompt_pool(cfg.prompt_pool));
}

inline FederationSetup make_setup(const ExperimentConfig& cfg, const ExperimentData& data, std::uint64_t master_seed) {
  FederationSetup s;
  s.model = ModelSpec{cfg.model_kind, data.train.dim(), cfg.num_classes(), cfg.hidden};
  s.federation = cfg.federation;
  s.federation.num_clients = cfg.num_clients;
  s.federation.seed = federation_seed(master_seed);
  s.local = cfg.local;
  s.optimizer = cfg.optimizer;
  s.comm = cfg.comm;
  if (cfg.local.algorithm != Algorithm::scaffold) s.comm.include_control_variates = false;
  return s;
}

struct RunOutcome {
  std::uint64_t seed = 0;
  FederationResult result;
  double final_accuracy = 0.0;
  std::optional<CommToTarget> to_target;
};

inline std::string records_csv(const std::vector<RoundRecord>& records) {
  using experiment_detail::fmt;
  std::string s = "round,test_accuracy,test_loss,bytes_up,bytes_down,wall_ms\n";
  for (const auto& r : records)
    s += std::to_string(r.round) + "," + fmt("%.6f", r.test_accuracy) + "," + fmt("%.6f", r.test_loss) + "," +
         std::to_string(r.bytes_up) + "," + std::to_string(r.bytes_down) + "," + fmt("%.3f", r.wall_ms) + "\n";
  return s;
}

/// Everything deterministic about one run.
inline nlohmann::json run_summary(const ExperimentConfig& cfg, const RunOutcome& o) {
  using namespace experiment_detail;
  const auto per_round = bytes_per_round(o.result.comm);
  nlohmann::json j{{"seed", o.seed},
                   {"algorithm", std::string(to_string(cfg.local.algorithm))},
                   {"variant", variant_name(cfg)},
                   {"heterogeneity", heterogeneity_name(cfg.alpha)},
                   {"augment", cfg.augment ? "genfedsd" : "none"},
                   {"prompt_design", std::string(to_string(cfg.prompt_design))},
                   {"generator", std::string(to_string(cfg.generator.kind))},
                   {"rounds", o.result.records.size()},
                   {"final_accuracy", o.final_accuracy},
                   {"final_window", cfg.eval_window},
                   {"param_count", o.result.comm.param_count},
                   {"bytes_per_round", per_round},
                   {"client_sizes", nlohmann::json::array()}};
  for (const auto& h : o.result.client_histograms) j["client_sizes"].push_back(h.total());
  if (cfg.target_accuracy) {
    j["target_accuracy"] = *cfg.target_accuracy;
    if (o.to_target) {
      j["rounds_to_target"] = o.to_target->rounds;
      j["mb_to_target"] = to_megabytes(o.to_target->bytes);
    } else {
      j["rounds_to_target"] = nullptr;
      j["mb_to_target"] = nullptr;
    }
  }
  return j;
}

/// One federated run for one master seed. Writes records.csv and
/// summary.json into `out_dir` when it is non-empty.
inline RunOutcome run_experiment(const ExperimentConfig& cfg, std::uint64_t master_seed,
                                 const std::filesystem::path& out_dir = {}, std::ostream* log = nullptr) {
  using namespace experiment_detail;
  const auto data = load_data(cfg, master_seed);
  const auto parts = make_partition(cfg, data.train, master_seed);
  std::vector<LabeledDataset> clients;
  clients.reserve(parts.size());
  for (const auto& idx : parts) clients.push_back(data.train.subset(idx));

  std::unique_ptr<Generator> gen;
  std::optional<PromptRenderer> prompts;
  if (cfg.augment) {
    gen = make_generator(cfg, data, master_seed, log);
    prompts.emplace(make_prompts(cfg));
  }
  const auto setup = make_setup(cfg, data, master_seed);
  AugmentationSetup aug{gen.get(), prompts ? &*prompts : nullptr, cfg.generator.parallel};

  const std::size_t every = std::max<std::size_t>(1, cfg.federation.rounds / 10);
  RunOutcome o;
  o.seed = master_seed;
  o.result = run_federation(setup, std::move(clients), data.test, aug, [&](const RoundRecord& r) {
    if (log && (r.round % every == 0 || r.round == cfg.federation.rounds))
      *log << "seed " << master_seed << " round " << r.round << "/" << cfg.federation.rounds << " acc "
           << fmt("%.4f", r.test_accuracy) << "\n";
  });
  o.final_accuracy = final_accuracy(o.result.records, cfg.eval_window);
  if (cfg.target_accuracy) o.to_target = comm_to_target(o.result.records, *cfg.target_accuracy, o.result.comm);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "records.csv", records_csv(o.result.records));
    write_json(out_dir / "summary.json", run_summary(cfg, o));
  }
  return o;
}

/// Mean ± std across seeds, in the shape `fedsd report` reads.
inline nlohmann::json aggregate_summary(const ExperimentConfig& cfg, const std::vector<RunOutcome>& runs) {
  using namespace experiment_detail;
  std::vector<double> acc, mb;
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& r : runs) {
    acc.push_back(r.final_accuracy);
    seeds.push_back(r.seed);
    if (r.to_target) mb.push_back(to_megabytes(r.to_target->bytes));
  }
  const auto a = mean_std(acc);
  nlohmann::json j{{"algorithm", std::string(to_string(cfg.local.algorithm))},
                   {"variant", variant_name(cfg)},
                   {"heterogeneity", heterogeneity_name(cfg.alpha)},
                   {"seeds", seeds},
                   {"final_accuracy", {{"mean", a.mean}, {"std", a.stddev}, {"per_seed", acc}}}};
  if (cfg.target_accuracy) {
    j["target_accuracy"] = *cfg.target_accuracy;
    j["reached_target"] = mb.size();
    if (mb.size() == runs.size() && !mb.empty()) {
      const auto m = mean_std(mb);
      j["mb_to_target"] = {{"mean", m.mean}, {"std", m.stddev}};
    } else {
      j["mb_to_target"] = nullptr;
    }
  }
  return j;
}

/// Every seed of the config; per-seed files under <output_dir>/seed-<s>/.
inline std::vector<RunOutcome> cmd_run(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  std::vector<RunOutcome> runs;
  for (auto s : cfg.run_seeds())
    runs.push_back(run_experiment(cfg, s, cfg.output_dir / ("seed-" + std::to_string(s)), log));
  experiment_detail::write_json(cfg.output_dir / "summary.json", aggregate_summary(cfg, runs));
  return runs;
}

/// Client index lists (one per line) and per-client label histograms.
inline ClientIndices cmd_partition(const ExperimentConfig& cfg) {
  using namespace experiment_detail;
  const auto data = load_data(cfg, cfg.seed);
  const auto parts = make_partition(cfg, data.train, cfg.seed);
  const auto dir = cfg.output_dir / "partition";
  nlohmann::json j{{"seed", cfg.seed},
                   {"alpha", cfg.alpha},
                   {"num_clients", cfg.num_clients},
                   {"train_size", data.train.size()},
                   {"clients", nlohmann::json::array()}};
  for (std::size_t k = 0; k < parts.size(); ++k) {
    std::string lines;
    for (auto i : parts[k]) lines += std::to_string(i) + "\n";
    write_text(dir / (client_name(k) + ".txt"), lines);
    const auto h = histogram(data.train.subset(parts[k]));
    j["clients"].push_back({{"client", k}, {"size", h.total()}, {"label_counts", h.counts()}});
  }
  write_json(dir / "partition.json", j);
  return parts;
}

/// Client index lists written by cmd_partition: client-000.txt, client-001.txt, ...
inline ClientIndices read_partition(const std::filesystem::path& dir, std::size_t num_clients, std::size_t train_size) {
  ClientIndices parts(num_clients);
  std::vector<bool> seen(train_size, false);
  for (std::size_t k = 0; k < num_clients; ++k) {
    const auto p = dir / (experiment_detail::client_name(k) + ".txt");
    std::ifstream in(p);
    if (!in) throw DataError("cannot open " + p.string());
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      std::size_t i = 0;
      try {
        i = std::stoul(line);
      } catch (const std::exception&) {
        throw DataError(p.string() + ": bad index '" + line + "'");
      }
      if (i >= train_size || seen[i]) throw DataError(p.string() + ": index " + line + " out of range or repeated");
      seen[i] = true;
      parts[k].push_back(i);
    }
  }
  if (std::filesystem::exists(dir / (experiment_detail::client_name(num_clients) + ".txt")))
    throw ConfigError("partition.num_clients", dir.string() + " holds more than " + std::to_string(num_clients) + " clients");
  return parts;
}

/// Per-client generation plans and the exact prompts `run` will send. The
/// partition is drawn from the config unless `partition_dir` holds one.
inline std::vector<GenerationPlan> cmd_plan(const ExperimentConfig& cfg, const std::filesystem::path& partition_dir = {}) {
  using namespace experiment_detail;
  const auto data = load_data(cfg, cfg.seed);
  const auto parts = partition_dir.empty() ? make_partition(cfg, data.train, cfg.seed)
                                           : read_partition(partition_dir, cfg.num_clients, data.train.size());
  const auto prompts = make_prompts(cfg);
  const auto names = cfg.class_names();
  const auto fseed = federation_seed(cfg.seed);
  const auto dir = cfg.output_dir / "plan";
  std::vector<GenerationPlan> plans;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto hist = histogram(data.train.subset(parts[k]));
    if (hist.total() == 0) throw DataError(client_name(k) + " owns no samples");
    auto plan = build_plan(hist);
    Rng rng(derive_seed(fseed, "generation", {k}));
    const auto per_class = plan_prompts(plan, prompts, rng);

    nlohmann::json j = to_json(plan);
    j["client"] = k;
    j["label_counts"] = hist.counts();
    j["prompt_design"] = std::string(to_string(cfg.prompt_design));
    nlohmann::json classes = nlohmann::json::array();
    std::string text;
    for (std::size_t y = 0; y < per_class.size(); ++y) {
      std::map<std::string, std::size_t> tally;
      for (const auto& p : per_class[y]) {
        text += std::to_string(y) + "\t" + p.text + "\n";
        ++tally[p.text];
      }
      classes.push_back({{"label", y}, {"name", names[y]}, {"quota", plan.quotas[y]}, {"prompts", tally}});
    }
    j["classes"] = classes;
    write_json(dir / (client_name(k) + ".json"), j);
    write_text(dir / (client_name(k) + ".prompts.txt"), text);
    plans.push_back(std::move(plan));
  }
  return plans;
}

/// `count` samples of class `label` from the configured generator.
inline LabeledDataset cmd_generate(const ExperimentConfig& cfg, int label, std::size_t count,
                                   const std::filesystem::path& out_file, std::ostream* log = nullptr) {
  if (label < 0 || static_cast<std::size_t>(label) >= cfg.num_classes())
    throw ConfigError("--label", "must lie in [0, " + std::to_string(cfg.num_classes()) + ")");
  const auto data = load_data(cfg, cfg.seed);
  const auto gen = make_generator(cfg, data, cfg.seed, log);
  const auto prompts = make_prompts(cfg);
  Rng prompt_rng(derive_seed(cfg.seed, "generate/prompts", {static_cast<std::uint64_t>(label)}));
  Rng gen_rng(derive_seed(cfg.seed, "generate/samples", {static_cast<std::uint64_t>(label)}));
  GenerationRequest req{label, count, prompts.render(label, count, prompt_rng)};
  LabeledDataset out(gen->sample_dim(), cfg.num_classes(), Provenance::synthetic);
  for (auto& s : generate(*gen, req, gen_rng)) out.add(std::move(s));
  if (out_file.has_parent_path()) std::filesystem::create_directories(out_file.parent_path());
  save_dataset(out_file, out);
  return out;
}

/// Trains the configured DDPM on the reserve and saves it.
inline DdpmTrainReport cmd_train_ddpm(const ExperimentConfig& cfg, const std::filesystem::path& out_file) {
  const auto data = load_data(cfg, cfg.seed);
  auto trained = train_configured_ddpm(cfg, data, cfg.seed);
  if (out_file.has_parent_path()) std::filesystem::create_directories(out_file.parent_path());
  save_ddpm(out_file, trained.model, ddpm_schedule(cfg));
  return trained.report;
}

/// Reads aggregate summaries (files, or directories holding summary.json).
inline std::vector<ReportEntry> read_report_entries(const std::vector<std::filesystem::path>& inputs) {
  std::vector<ReportEntry> entries;
  for (auto p : inputs) {
    if (std::filesystem::is_directory(p)) p /= "summary.json";
    std::ifstream in(p);
    if (!in) throw DataError("cannot open " + p.string());
    try {
      const auto j = nlohmann::json::parse(in);
      ReportEntry e;
      e.baseline = j.at("algorithm").get<std::string>();
      e.variant = j.at("variant").get<std::string>();
      e.heterogeneity = j.at("heterogeneity").get<std::string>();
      const auto& fa = j.at("final_accuracy");
      if (fa.is_object()) {
        e.accuracy = {fa.at("mean").get<double>(), fa.at("std").get<double>()};
      } else {
        e.accuracy = {fa.get<double>(), 0.0};
      }
      if (j.contains("mb_to_target") && j["mb_to_target"].is_object())
        e.comm_mb = j["mb_to_target"].at("mean").get<double>();
      else if (j.contains("mb_to_target") && j["mb_to_target"].is_number())
        e.comm_mb = j["mb_to_target"].get<double>();
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(p.string() + ": " + ex.what());
    }
  }
  return entries;
}

}  // namespace fedsd
