#pragma once

// Model checkpoints: u32 LE header length | UTF-8 JSON header | P × f32 LE.
// The header always carries "param_count"; the rest is model-specific.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsd/dataset_io.hpp"
#include "fedsd/diffusion.hpp"
#include "fedsd/error.hpp"
#include "fedsd/model.hpp"

namespace fedsd {

struct Checkpoint {
  nlohmann::json header;
  std::vector<double> params;
};

inline void write_checkpoint(std::ostream& out, nlohmann::json header, std::span<const double> params) {
  header["param_count"] = params.size();
  const std::string text = header.dump();
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double p : params) detail::put_le<float>(out, static_cast<float>(p));
}

inline Checkpoint read_checkpoint(std::istream& in) {
  const auto len = detail::get_le<std::uint32_t>(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw DataError("checkpoint: truncated header");
  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (!ck.header.contains("param_count")) throw DataError("checkpoint: header lacks param_count");
  const auto n = ck.header["param_count"].get<std::size_t>();
  ck.params.resize(n);
  for (auto& p : ck.params) p = detail::get_le<float>(in);
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& header,
                            std::span<const double> params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, header, params);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

inline nlohmann::json ddpm_header(const DdpmModel& model, const BetaSchedule& schedule) {
  const auto& s = model.spec();
  return {{"format", "fedsd-ddpm"},
          {"dim", s.dim},
          {"num_classes", s.num_classes},
          {"time_embed_dim", s.time_embed_dim},
          {"class_embed_dim", s.class_embed_dim},
          {"hidden", s.hidden},
          {"activation", std::string(to_string(s.activation))},
          {"T", schedule.steps()},
          {"schedule", {{"betas", schedule.betas()}}}};
}

inline void save_ddpm(const std::filesystem::path& path, const DdpmModel& model, const BetaSchedule& schedule) {
  save_checkpoint(path, ddpm_header(model, schedule), model.params().values());
}

struct LoadedDdpm {
  DdpmModel model;
  BetaSchedule schedule;
};

/// Parameters come back rounded to float32.
inline LoadedDdpm load_ddpm(const std::filesystem::path& path) {
  auto ck = load_checkpoint(path);
  const auto& h = ck.header;
  try {
    if (h.at("format") != "fedsd-ddpm") throw DataError("checkpoint is not a DDPM checkpoint");
    DdpmSpec spec;
    spec.dim = h.at("dim").get<std::size_t>();
    spec.num_classes = h.at("num_classes").get<std::size_t>();
    spec.time_embed_dim = h.at("time_embed_dim").get<std::size_t>();
    spec.class_embed_dim = h.at("class_embed_dim").get<std::size_t>();
    spec.hidden = h.at("hidden").get<std::vector<std::size_t>>();
    spec.activation = activation_from_string(h.at("activation").get<std::string>());
    BetaSchedule schedule(h.at("schedule").at("betas").get<std::vector<double>>());
    if (schedule.steps() != h.at("T").get<std::size_t>()) throw DataError("checkpoint: T disagrees with schedule");
    ParamVector params(spec.layout(), std::move(ck.params));
    return {DdpmModel(std::move(spec), std::move(params)), std::move(schedule)};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_classifier(const std::filesystem::path& path, const ModelSpec& spec, const ParamVector& params) {
  save_checkpoint(path,
                  {{"format", "fedsd-classifier"},
                   {"kind", std::string(to_string(spec.kind))},
                   {"input_dim", spec.input_dim},
                   {"num_classes", spec.num_classes},
                   {"hidden", spec.hidden}},
                  params.values());
}

}  // namespace fedsd
