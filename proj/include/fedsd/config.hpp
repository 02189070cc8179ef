#pragma once

// Experiment configuration: a nested YAML document mapped onto the library's
// config structs. Every rejection is a ConfigError naming the dotted field
// path, including unknown keys. Requires yaml-cpp.

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fedsd/blobs.hpp"
#include "fedsd/diffusion.hpp"
#include "fedsd/error.hpp"
#include "fedsd/federation.hpp"
#include "fedsd/local_train.hpp"
#include "fedsd/metrics.hpp"
#include "fedsd/model.hpp"
#include "fedsd/optim.hpp"
#include "fedsd/prompts.hpp"
#include "fedsd/remote_generator.hpp"

namespace fedsd {

enum class DatasetKind { blobs, file };
enum class GeneratorKind { pool, gaussian, ddpm, remote };

inline std::string_view to_string(GeneratorKind k) noexcept {
  switch (k) {
    case GeneratorKind::pool: return "pool";
    case GeneratorKind::gaussian: return "gaussian";
    case GeneratorKind::ddpm: return "ddpm";
    case GeneratorKind::remote: return "remote";
  }
  return "unknown";
}

inline GeneratorKind generator_from_string(std::string_view s, const std::string& path = "generator.kind") {
  if (s == "pool") return GeneratorKind::pool;
  if (s == "gaussian") return GeneratorKind::gaussian;
  if (s == "ddpm") return GeneratorKind::ddpm;
  if (s == "remote") return GeneratorKind::remote;
  throw ConfigError(path, "unknown generator '" + std::string(s) + "' (pool, gaussian, ddpm, remote)");
}

inline std::string_view to_string(PromptDesign d) noexcept { return d == PromptDesign::fixed ? "fixed" : "diverse"; }

inline PromptDesign prompt_design_from_string(std::string_view s, const std::string& path = "prompts.design") {
  if (s == "fixed") return PromptDesign::fixed;
  if (s == "diverse") return PromptDesign::diverse;
  throw ConfigError(path, "unknown prompt design '" + std::string(s) + "' (fixed, diverse)");
}

struct DatasetConfig {
  DatasetKind kind = DatasetKind::blobs;
  BlobsSpec blobs{10, 2, 3.0, 1.0, {}};
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 100;
  std::size_t reserve_per_class = 500;
  std::filesystem::path train, test, reserve;
  std::vector<std::string> class_names;  // defaults to class0, class1, ...
};

struct GaussianConfig {
  std::optional<double> stddev;  // defaults to the blob spread
  double template_jitter = 0.0;
  std::vector<std::vector<double>> means;  // defaults to blob centers or reserve class means
};

struct DdpmConfig {
  std::filesystem::path checkpoint;  // load instead of training when set
  std::size_t timesteps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  DdpmSpec net;
  DdpmTrainConfig train;
  std::size_t workers = 1;
};

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::pool;
  bool parallel = false;
  GaussianConfig gaussian;
  DdpmConfig ddpm;
  RemoteGeneratorConfig remote;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;  // batch of master seeds; empty means {seed}
  std::filesystem::path output_dir = "runs/default";
  DatasetConfig dataset;
  std::size_t num_clients = 20;
  double alpha = 0.5;
  FederationConfig federation;
  LocalTrainConfig local;
  OptimizerConfig optimizer;
  ModelKind model_kind = ModelKind::mlp;
  std::size_t hidden = 32;
  bool augment = false;
  PromptDesign prompt_design = PromptDesign::fixed;
  std::filesystem::path prompt_pool;
  GeneratorConfig generator;
  CommModel comm;  // param_count and clients_per_round are filled per run
  std::optional<double> target_accuracy;
  std::size_t eval_window = 10;

  std::vector<std::uint64_t> run_seeds() const { return seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds; }

  std::size_t num_classes() const {
    return dataset.kind == DatasetKind::blobs ? dataset.blobs.num_classes : dataset.class_names.size();
  }

  std::vector<std::string> class_names() const {
    if (!dataset.class_names.empty()) return dataset.class_names;
    std::vector<std::string> names;
    for (std::size_t y = 0; y < num_classes(); ++y) names.push_back("class" + std::to_string(y));
    return names;
  }

  /// Field-level and cross-field checks; throws on the first violation.
  void validate() const;
};

namespace config_detail {

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// Rejects keys outside `allowed`; a null node counts as an empty mapping.
inline void check_map(const YAML::Node& node, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!node || node.IsNull()) return;
  if (!node.IsMap()) throw ConfigError(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(join(path, key), "unknown field");
  }
}

inline YAML::Node child(const YAML::Node& node, const std::string& key) {
  if (!node || node.IsNull()) return YAML::Node();
  return node[key];
}

inline bool present(const YAML::Node& n) { return n && !n.IsNull(); }

inline double get_double(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path, "expected a number");
  try {
    const double v = node.as<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
    return v;
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "expected a number, got '" + node.Scalar() + "'");
  }
}

inline std::uint64_t get_uint(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path, "expected a non-negative integer");
  const auto& s = node.Scalar();
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(path, "expected a non-negative integer, got '" + s + "'");
  try {
    return node.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "integer out of range: '" + s + "'");
  }
}

inline bool get_bool(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path, "expected true or false");
  try {
    return node.as<bool>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "expected true or false, got '" + node.Scalar() + "'");
  }
}

inline std::string get_string(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path, "expected a string");
  return node.Scalar();
}

template <typename F>
void read(const YAML::Node& map, const std::string& path, const std::string& key, F&& assign) {
  const auto n = child(map, key);
  if (present(n)) assign(n, join(path, key));
}

inline void read_double(const YAML::Node& m, const std::string& p, const std::string& k, double& out) {
  read(m, p, k, [&](const YAML::Node& n, const std::string& path) { out = get_double(n, path); });
}
inline void read_size(const YAML::Node& m, const std::string& p, const std::string& k, std::size_t& out) {
  read(m, p, k, [&](const YAML::Node& n, const std::string& path) { out = get_uint(n, path); });
}
inline void read_bool(const YAML::Node& m, const std::string& p, const std::string& k, bool& out) {
  read(m, p, k, [&](const YAML::Node& n, const std::string& path) { out = get_bool(n, path); });
}
inline void read_string(const YAML::Node& m, const std::string& p, const std::string& k, std::string& out) {
  read(m, p, k, [&](const YAML::Node& n, const std::string& path) { out = get_string(n, path); });
}
inline void read_path(const YAML::Node& m, const std::string& p, const std::string& k, std::filesystem::path& out,
                      const std::filesystem::path& base) {
  read(m, p, k, [&](const YAML::Node& n, const std::string& path) {
    std::filesystem::path v = get_string(n, path);
    if (v.empty()) throw ConfigError(path, "must not be empty");
    out = v.is_relative() && !base.empty() ? base / v : v;
  });
}

inline std::vector<double> get_vector(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ConfigError(path, "expected a list of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < node.size(); ++i) v.push_back(get_double(node[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

inline std::vector<std::size_t> get_size_list(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ConfigError(path, "expected a list of integers");
  std::vector<std::size_t> v;
  for (std::size_t i = 0; i < node.size(); ++i) v.push_back(get_uint(node[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

inline std::vector<std::vector<double>> get_matrix(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ConfigError(path, "expected a list of vectors");
  std::vector<std::vector<double>> m;
  for (std::size_t i = 0; i < node.size(); ++i) m.push_back(get_vector(node[i], path + "[" + std::to_string(i) + "]"));
  return m;
}

inline void read_optimizer(const YAML::Node& node, const std::string& path, OptimizerConfig& o) {
  check_map(node, path, {"kind", "lr", "weight_decay", "beta1", "beta2", "eps"});
  read(node, path, "kind", [&](const YAML::Node& n, const std::string& p) {
    const auto s = get_string(n, p);
    if (s == "adamw") o.kind = OptimizerKind::adamw;
    else if (s == "sgd") o.kind = OptimizerKind::sgd;
    else throw ConfigError(p, "unknown optimizer '" + s + "' (adamw, sgd)");
  });
  read_double(node, path, "lr", o.lr);
  read_double(node, path, "weight_decay", o.weight_decay);
  read_double(node, path, "beta1", o.beta1);
  read_double(node, path, "beta2", o.beta2);
  read_double(node, path, "eps", o.eps);
}

}  // namespace config_detail

/// Parses a config document. Relative paths inside it resolve against `base_dir`.
inline ExperimentConfig parse_config(const YAML::Node& root, const std::filesystem::path& base_dir = {}) {
  using namespace config_detail;
  ExperimentConfig c;
  check_map(root, "",
            {"seed", "seeds", "output_dir", "dataset", "partition", "federation", "local", "optimizer", "model",
             "augment", "prompts", "generator", "comm", "evaluation"});

  read(root, "", "seed", [&](const YAML::Node& n, const std::string& p) { c.seed = get_uint(n, p); });
  read(root, "", "seeds", [&](const YAML::Node& n, const std::string& p) {
    if (!n.IsSequence()) throw ConfigError(p, "expected a list of integers");
    for (std::size_t i = 0; i < n.size(); ++i) c.seeds.push_back(get_uint(n[i], p + "[" + std::to_string(i) + "]"));
  });
  read(root, "", "output_dir", [&](const YAML::Node& n, const std::string& p) { c.output_dir = get_string(n, p); });

  {
    const auto d = child(root, "dataset");
    const std::string p = "dataset";
    check_map(d, p,
              {"kind", "num_classes", "dim", "radius", "spread", "centers", "train_per_class", "test_per_class",
               "reserve_per_class", "train", "test", "reserve", "class_names"});
    read(d, p, "kind", [&](const YAML::Node& n, const std::string& q) {
      const auto s = get_string(n, q);
      if (s == "blobs") c.dataset.kind = DatasetKind::blobs;
      else if (s == "file") c.dataset.kind = DatasetKind::file;
      else throw ConfigError(q, "unknown dataset kind '" + s + "' (blobs, file)");
    });
    read_size(d, p, "num_classes", c.dataset.blobs.num_classes);
    read_size(d, p, "dim", c.dataset.blobs.dim);
    read_double(d, p, "radius", c.dataset.blobs.radius);
    read_double(d, p, "spread", c.dataset.blobs.spread);
    read(d, p, "centers", [&](const YAML::Node& n, const std::string& q) { c.dataset.blobs.centers = get_matrix(n, q); });
    read_size(d, p, "train_per_class", c.dataset.train_per_class);
    read_size(d, p, "test_per_class", c.dataset.test_per_class);
    read_size(d, p, "reserve_per_class", c.dataset.reserve_per_class);
    read_path(d, p, "train", c.dataset.train, base_dir);
    read_path(d, p, "test", c.dataset.test, base_dir);
    read_path(d, p, "reserve", c.dataset.reserve, base_dir);
    read(d, p, "class_names", [&](const YAML::Node& n, const std::string& q) {
      if (!n.IsSequence()) throw ConfigError(q, "expected a list of strings");
      for (std::size_t i = 0; i < n.size(); ++i)
        c.dataset.class_names.push_back(get_string(n[i], q + "[" + std::to_string(i) + "]"));
    });
  }
  {
    const auto n = child(root, "partition");
    check_map(n, "partition", {"num_clients", "alpha"});
    read_size(n, "partition", "num_clients", c.num_clients);
    read_double(n, "partition", "alpha", c.alpha);
  }
  {
    const auto n = child(root, "federation");
    const std::string p = "federation";
    check_map(n, p, {"algorithm", "rounds", "sample_rate", "server_lr", "workers"});
    read(n, p, "algorithm", [&](const YAML::Node& v, const std::string& q) {
      c.local.algorithm = algorithm_from_string(get_string(v, q), q);
    });
    read_size(n, p, "rounds", c.federation.rounds);
    read_double(n, p, "sample_rate", c.federation.sample_rate);
    read_double(n, p, "server_lr", c.federation.server_lr);
    read_size(n, p, "workers", c.federation.workers);
  }
  {
    const auto n = child(root, "local");
    check_map(n, "local", {"iterations", "batch_size", "mu"});
    read_size(n, "local", "iterations", c.local.iterations);
    read_size(n, "local", "batch_size", c.local.batch_size);
    read_double(n, "local", "mu", c.local.mu);
  }
  read_optimizer(child(root, "optimizer"), "optimizer", c.optimizer);
  {
    const auto n = child(root, "model");
    check_map(n, "model", {"kind", "hidden"});
    read(n, "model", "kind", [&](const YAML::Node& v, const std::string& q) {
      const auto s = get_string(v, q);
      if (s == "linear") c.model_kind = ModelKind::linear;
      else if (s == "mlp") c.model_kind = ModelKind::mlp;
      else throw ConfigError(q, "unknown model '" + s + "' (linear, mlp)");
    });
    read_size(n, "model", "hidden", c.hidden);
  }
  read(root, "", "augment", [&](const YAML::Node& n, const std::string& p) {
    const auto s = get_string(n, p);
    if (s == "none") c.augment = false;
    else if (s == "genfedsd") c.augment = true;
    else throw ConfigError(p, "expected none or genfedsd, got '" + s + "'");
  });
  {
    const auto n = child(root, "prompts");
    check_map(n, "prompts", {"design", "pool_file"});
    read(n, "prompts", "design", [&](const YAML::Node& v, const std::string& q) {
      c.prompt_design = prompt_design_from_string(get_string(v, q), q);
    });
    read_path(n, "prompts", "pool_file", c.prompt_pool, base_dir);
  }
  {
    const auto g = child(root, "generator");
    const std::string p = "generator";
    check_map(g, p, {"kind", "parallel", "gaussian", "ddpm", "remote"});
    read(g, p, "kind", [&](const YAML::Node& v, const std::string& q) {
      c.generator.kind = generator_from_string(get_string(v, q), q);
    });
    read_bool(g, p, "parallel", c.generator.parallel);

    const auto ga = child(g, "gaussian");
    const std::string gp = "generator.gaussian";
    check_map(ga, gp, {"stddev", "template_jitter", "means"});
    read(ga, gp, "stddev", [&](const YAML::Node& v, const std::string& q) { c.generator.gaussian.stddev = get_double(v, q); });
    read_double(ga, gp, "template_jitter", c.generator.gaussian.template_jitter);
    read(ga, gp, "means", [&](const YAML::Node& v, const std::string& q) { c.generator.gaussian.means = get_matrix(v, q); });

    const auto dd = child(g, "ddpm");
    const std::string dp = "generator.ddpm";
    auto& ddpm = c.generator.ddpm;
    check_map(dd, dp,
              {"checkpoint", "timesteps", "beta_start", "beta_end", "time_embed_dim", "class_embed_dim", "hidden",
               "max_steps", "batch_size", "loss_window", "target_loss", "optimizer", "workers"});
    read_path(dd, dp, "checkpoint", ddpm.checkpoint, base_dir);
    read_size(dd, dp, "timesteps", ddpm.timesteps);
    read_double(dd, dp, "beta_start", ddpm.beta_start);
    read_double(dd, dp, "beta_end", ddpm.beta_end);
    read_size(dd, dp, "time_embed_dim", ddpm.net.time_embed_dim);
    read_size(dd, dp, "class_embed_dim", ddpm.net.class_embed_dim);
    read(dd, dp, "hidden", [&](const YAML::Node& v, const std::string& q) { ddpm.net.hidden = get_size_list(v, q); });
    read_size(dd, dp, "max_steps", ddpm.train.max_steps);
    read_size(dd, dp, "batch_size", ddpm.train.batch_size);
    read_size(dd, dp, "loss_window", ddpm.train.loss_window);
    read_double(dd, dp, "target_loss", ddpm.train.target_loss);
    read_optimizer(child(dd, "optimizer"), dp + ".optimizer", ddpm.train.optimizer);
    read_size(dd, dp, "workers", ddpm.workers);

    const auto re = child(g, "remote");
    const std::string rp = "generator.remote";
    auto& remote = c.generator.remote;
    check_map(re, rp,
              {"url", "target_size", "send_target_size", "num_inference_steps", "guidance_scale", "max_batch",
               "max_in_flight", "max_attempts", "backoff_ms", "timeout_s"});
    read_string(re, rp, "url", remote.url);
    read(re, rp, "target_size", [&](const YAML::Node& v, const std::string& q) {
      const auto s = get_size_list(v, q);
      if (s.size() != 2) throw ConfigError(q, "expected [width, height]");
      remote.width = s[0];
      remote.height = s[1];
    });
    read_bool(re, rp, "send_target_size", remote.send_target_size);
    read_size(re, rp, "num_inference_steps", remote.num_inference_steps);
    read_double(re, rp, "guidance_scale", remote.guidance_scale);
    read_size(re, rp, "max_batch", remote.max_batch);
    read_size(re, rp, "max_in_flight", remote.max_in_flight);
    read_size(re, rp, "max_attempts", remote.max_attempts);
    read_size(re, rp, "backoff_ms", remote.backoff_ms);
    read_size(re, rp, "timeout_s", remote.timeout_s);
  }
  {
    const auto n = child(root, "comm");
    check_map(n, "comm", {"bytes_per_param", "directions", "include_control_variates", "target_accuracy"});
    read(n, "comm", "bytes_per_param", [&](const YAML::Node& v, const std::string& q) { c.comm.bytes_per_param = get_uint(v, q); });
    read(n, "comm", "directions", [&](const YAML::Node& v, const std::string& q) { c.comm.directions = get_uint(v, q); });
    read_bool(n, "comm", "include_control_variates", c.comm.include_control_variates);
    read(n, "comm", "target_accuracy", [&](const YAML::Node& v, const std::string& q) { c.target_accuracy = get_double(v, q); });
  }
  {
    const auto n = child(root, "evaluation");
    check_map(n, "evaluation", {"window"});
    read_size(n, "evaluation", "window", c.eval_window);
  }
  c.generator.remote.class_names = c.class_names();
  c.validate();
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<document>", std::string("YAML syntax error: ") + e.what());
  }
  return parse_config(root, base_dir);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.parent_path());
}

inline void ExperimentConfig::validate() const {
  if (dataset.kind == DatasetKind::blobs) {
    const auto& b = dataset.blobs;
    if (b.num_classes < 2) throw ConfigError("dataset.num_classes", "must be at least 2");
    if (b.dim == 0) throw ConfigError("dataset.dim", "must be positive");
    if (!(b.radius > 0.0)) throw ConfigError("dataset.radius", "must be positive");
    if (!(b.spread > 0.0)) throw ConfigError("dataset.spread", "must be positive");
    if (!b.centers.empty()) {
      if (b.centers.size() != b.num_classes) throw ConfigError("dataset.centers", "need one center per class");
      for (std::size_t i = 0; i < b.centers.size(); ++i)
        if (b.centers[i].size() != b.dim)
          throw ConfigError("dataset.centers[" + std::to_string(i) + "]", "dimension differs from dataset.dim");
    }
    if (dataset.train_per_class == 0) throw ConfigError("dataset.train_per_class", "must be positive");
    if (dataset.test_per_class == 0) throw ConfigError("dataset.test_per_class", "must be positive");
    if (!dataset.class_names.empty() && dataset.class_names.size() != b.num_classes)
      throw ConfigError("dataset.class_names", "need exactly num_classes names");
  } else {
    if (dataset.train.empty()) throw ConfigError("dataset.train", "required for file datasets");
    if (dataset.test.empty()) throw ConfigError("dataset.test", "required for file datasets");
    if (dataset.class_names.size() < 2)
      throw ConfigError("dataset.class_names", "file datasets must name every class (at least 2)");
  }
  for (std::size_t i = 0; i < dataset.class_names.size(); ++i)
    if (dataset.class_names[i].empty())
      throw ConfigError("dataset.class_names[" + std::to_string(i) + "]", "class name is empty");

  if (num_clients == 0) throw ConfigError("partition.num_clients", "must be at least 1");
  if (!(alpha > 0.0)) throw ConfigError("partition.alpha", "must be positive");

  FederationConfig f = federation;
  f.num_clients = num_clients;
  f.validate();
  local.validate();
  optimizer.validate();
  if (model_kind == ModelKind::mlp && hidden == 0) throw ConfigError("model.hidden", "must be positive");

  if (generator.gaussian.stddev && !(*generator.gaussian.stddev >= 0.0))
    throw ConfigError("generator.gaussian.stddev", "must be non-negative");
  if (!(generator.gaussian.template_jitter >= 0.0))
    throw ConfigError("generator.gaussian.template_jitter", "must be non-negative");
  if (!generator.gaussian.means.empty()) {
    if (generator.gaussian.means.size() != num_classes())
      throw ConfigError("generator.gaussian.means", "need one mean per class (generator must cover every label)");
    if (dataset.kind == DatasetKind::blobs)
      for (std::size_t i = 0; i < generator.gaussian.means.size(); ++i)
        if (generator.gaussian.means[i].size() != dataset.blobs.dim)
          throw ConfigError("generator.gaussian.means[" + std::to_string(i) + "]", "dimension differs from dataset.dim");
  }
  if (augment && generator.kind == GeneratorKind::gaussian && generator.gaussian.means.empty() &&
      dataset.kind == DatasetKind::file && dataset.reserve.empty())
    throw ConfigError("generator.gaussian.means", "file datasets need explicit means or a dataset.reserve");
  if (augment && generator.kind == GeneratorKind::pool && dataset.kind == DatasetKind::file && dataset.reserve.empty())
    throw ConfigError("dataset.reserve", "the pool generator needs a reserve file");
  if (augment && generator.kind == GeneratorKind::pool && dataset.kind == DatasetKind::blobs &&
      dataset.reserve_per_class == 0)
    throw ConfigError("dataset.reserve_per_class", "the pool generator needs a non-empty reserve");

  const auto& d = generator.ddpm;
  if (d.timesteps == 0) throw ConfigError("generator.ddpm.timesteps", "must be at least 1");
  if (!(d.beta_start > 0.0 && d.beta_start < 1.0)) throw ConfigError("generator.ddpm.beta_start", "must lie in (0, 1)");
  if (!(d.beta_end > 0.0 && d.beta_end < 1.0)) throw ConfigError("generator.ddpm.beta_end", "must lie in (0, 1)");
  if (d.net.hidden.empty()) throw ConfigError("generator.ddpm.hidden", "need at least one hidden layer");
  for (std::size_t i = 0; i < d.net.hidden.size(); ++i)
    if (d.net.hidden[i] == 0) throw ConfigError("generator.ddpm.hidden[" + std::to_string(i) + "]", "must be positive");
  if (d.net.time_embed_dim == 0) throw ConfigError("generator.ddpm.time_embed_dim", "must be positive");
  if (d.net.class_embed_dim == 0) throw ConfigError("generator.ddpm.class_embed_dim", "must be positive");
  if (d.workers == 0) throw ConfigError("generator.ddpm.workers", "must be at least 1");
  if (d.train.max_steps == 0) throw ConfigError("generator.ddpm.max_steps", "must be positive");
  if (d.train.batch_size == 0) throw ConfigError("generator.ddpm.batch_size", "must be positive");
  if (d.train.loss_window == 0) throw ConfigError("generator.ddpm.loss_window", "must be positive");
  if (!(d.train.target_loss >= 0.0)) throw ConfigError("generator.ddpm.target_loss", "must be non-negative");
  d.train.optimizer.validate("generator.ddpm.optimizer");
  if (generator.kind == GeneratorKind::remote) generator.remote.validate();

  if (comm.bytes_per_param == 0) throw ConfigError("comm.bytes_per_param", "must be positive");
  if (comm.directions == 0 || comm.directions > 2) throw ConfigError("comm.directions", "must be 1 or 2");
  if (target_accuracy && !(*target_accuracy >= 0.0 && *target_accuracy <= 1.0))
    throw ConfigError("comm.target_accuracy", "must lie in [0, 1]");
  if (eval_window == 0) throw ConfigError("evaluation.window", "must be positive");
  if (eval_window > federation.rounds)
    throw ConfigError("evaluation.window", "exceeds federation.rounds (" + std::to_string(federation.rounds) + ")");
}

}  // namespace fedsd
