// fedsd: command-line front end for the Gen-FedSD simulator.
//
//   fedsd partition  --config C [overrides]
//   fedsd plan       --config C [--partition DIR] [overrides]
//   fedsd generate   --config C --label Y --count N --output FILE
//   fedsd train-ddpm --config C --output FILE
//   fedsd run        --config C [overrides]
//   fedsd report     SUMMARY... [--output FILE]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fedsd/config.hpp"
#include "fedsd/experiment.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::string> algorithm;
  std::optional<std::string> augment;
  std::optional<std::string> prompt_design;
  std::optional<std::string> generator;
  std::optional<std::size_t> rounds;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "experiment YAML")->required();
  cmd->add_option("--seed", o.seed, "master seed (replaces seed and seeds)");
  cmd->add_option("-o,--out", o.out, "output directory");
  cmd->add_option("--workers", o.workers, "client-training threads");
  cmd->add_option("--algorithm", o.algorithm, "fedavg, fedprox, fednova or scaffold");
  cmd->add_option("--augment", o.augment, "none or genfedsd");
  cmd->add_option("--prompt-design", o.prompt_design, "fixed or diverse");
  cmd->add_option("--generator", o.generator, "pool, gaussian, ddpm or remote");
  cmd->add_option("--rounds", o.rounds, "communication rounds");
}

fedsd::ExperimentConfig load(const Overrides& o) {
  auto cfg = fedsd::load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.seeds.clear();
  }
  if (o.out) cfg.output_dir = *o.out;
  if (o.workers) cfg.federation.workers = *o.workers;
  if (o.algorithm) cfg.local.algorithm = fedsd::algorithm_from_string(*o.algorithm, "--algorithm");
  if (o.augment) {
    if (*o.augment == "none") cfg.augment = false;
    else if (*o.augment == "genfedsd") cfg.augment = true;
    else throw fedsd::ConfigError("--augment", "expected none or genfedsd, got '" + *o.augment + "'");
  }
  if (o.prompt_design) cfg.prompt_design = fedsd::prompt_design_from_string(*o.prompt_design, "--prompt-design");
  if (o.generator) cfg.generator.kind = fedsd::generator_from_string(*o.generator, "--generator");
  if (o.rounds) cfg.federation.rounds = *o.rounds;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gen-FedSD federated learning simulator"};
  app.require_subcommand(1);

  Overrides o;
  auto* partition = app.add_subcommand("partition", "write the Dirichlet client partition");
  add_common(partition, o);
  auto* plan = app.add_subcommand("plan", "write per-client generation plans and prompts");
  add_common(plan, o);
  std::string partition_dir;
  plan->add_option("--partition", partition_dir, "directory written by fedsd partition");
  auto* run = app.add_subcommand("run", "run federated training for every configured seed");
  add_common(run, o);

  auto* generate = app.add_subcommand("generate", "sample one class from the configured generator");
  add_common(generate, o);
  int label = 0;
  std::size_t count = 0;
  std::string gen_out;
  generate->add_option("--label", label, "class index")->required();
  generate->add_option("--count", count, "number of samples")->required();
  generate->add_option("--output", gen_out, "dataset file (.csv or binary)")->required();

  auto* train = app.add_subcommand("train-ddpm", "train the configured DDPM on the reserve");
  add_common(train, o);
  std::string ckpt_out;
  train->add_option("--output", ckpt_out, "checkpoint file")->required();

  auto* report = app.add_subcommand("report", "markdown table from run summaries");
  std::vector<std::string> inputs;
  std::string report_out;
  report->add_option("inputs", inputs, "summary.json files or run directories")->required();
  report->add_option("--output", report_out, "write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigExit;
  }

  try {
    if (report->parsed()) {
      std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
      const auto md = fedsd::markdown_report(fedsd::read_report_entries(paths));
      if (report_out.empty()) std::cout << md;
      else fedsd::experiment_detail::write_text(report_out, md);
      return 0;
    }

    const auto cfg = load(o);
    if (partition->parsed()) {
      const auto parts = fedsd::cmd_partition(cfg);
      std::cout << "wrote " << parts.size() << " client index files to " << (cfg.output_dir / "partition").string()
                << "\n";
    } else if (plan->parsed()) {
      const auto plans = fedsd::cmd_plan(cfg, partition_dir);
      std::size_t total = 0;
      for (const auto& p : plans) total += p.total();
      std::cout << "wrote " << plans.size() << " plans (" << total << " synthetic samples) to "
                << (cfg.output_dir / "plan").string() << "\n";
    } else if (generate->parsed()) {
      const auto data = fedsd::cmd_generate(cfg, label, count, gen_out, &std::cerr);
      std::cout << "wrote " << data.size() << " samples of class " << label << " to " << gen_out << "\n";
    } else if (train->parsed()) {
      const auto rep = fedsd::cmd_train_ddpm(cfg, ckpt_out);
      std::cout << "trained " << rep.steps << " steps, running loss " << rep.running_loss << ", saved " << ckpt_out
                << "\n";
    } else if (run->parsed()) {
      const auto runs = fedsd::cmd_run(cfg, &std::cerr);
      for (const auto& r : runs) {
        std::cout << "seed " << r.seed << ": final accuracy " << r.final_accuracy;
        if (cfg.target_accuracy) {
          if (r.to_target)
            std::cout << ", target " << *cfg.target_accuracy << " after " << r.to_target->rounds << " rounds ("
                      << fedsd::to_megabytes(r.to_target->bytes) << " MB)";
          else
            std::cout << ", target " << *cfg.target_accuracy << " not reached";
        }
        std::cout << "\n";
      }
      std::cout << "summary: " << (cfg.output_dir / "summary.json").string() << "\n";
    }
  } catch (const fedsd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeExit;
  }
  return 0;
}
