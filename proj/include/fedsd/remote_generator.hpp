#pragma once

// Client for the text-to-image HTTP service.
//
//   POST /generate  {"prompt", "n", "num_inference_steps", "guidance_scale", "seed"[, "target_size": [w, h]]}
//                -> {"images": [base64 PNG, ...], "model_id", "elapsed_ms", ...}
//   GET  /health  -> {"status", "model_id"}
//
// Each returned image is decoded to RGB, resized bilinearly to the
// configured size when needed and flattened to features in [0, 1] (HWC).
// Requires libpng.

#include <png.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "fedsd/error.hpp"
#include "fedsd/generator.hpp"
#include "fedsd/image.hpp"
#include "fedsd/parallel.hpp"
#include "fedsd/prompts.hpp"

namespace fedsd {

/// PNG bytes to 8-bit RGB.
inline Image decode_png_rgb(const std::vector<std::uint8_t>& bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw std::runtime_error(std::string("png: ") + img.message);
  img.format = PNG_FORMAT_RGB;
  Image out;
  out.width = img.width;
  out.height = img.height;
  out.channels = 3;
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::runtime_error(std::string("png: ") + img.message);
  }
  return out;
}

struct RemoteGeneratorConfig {
  std::string url = "http://127.0.0.1:8000";
  std::size_t width = 32;
  std::size_t height = 32;
  std::size_t num_inference_steps = 20;
  double guidance_scale = 7.0;
  /// Ask the service to render at width × height instead of its native size.
  bool send_target_size = false;
  std::size_t max_batch = 8;      // images per request
  std::size_t max_in_flight = 2;  // concurrent requests per generator
  std::size_t max_attempts = 3;
  std::size_t backoff_ms = 200;  // doubled after each failed attempt
  std::size_t timeout_s = 300;
  /// Used to render "a photo of a {class}." when a request carries no prompts.
  std::vector<std::string> class_names;

  void validate(const std::string& path = "generator.remote") const {
    if (url.empty()) throw ConfigError(path + ".url", "must not be empty");
    if (width == 0 || height == 0) throw ConfigError(path + ".target_size", "must be positive");
    if (num_inference_steps == 0) throw ConfigError(path + ".num_inference_steps", "must be at least 1");
    if (!(guidance_scale >= 0.0)) throw ConfigError(path + ".guidance_scale", "must be non-negative");
    if (max_batch == 0) throw ConfigError(path + ".max_batch", "must be at least 1");
    if (max_in_flight == 0) throw ConfigError(path + ".max_in_flight", "must be at least 1");
    if (max_attempts == 0) throw ConfigError(path + ".max_attempts", "must be at least 1");
    if (class_names.empty()) throw ConfigError(path + ".class_names", "must list every class");
  }
};

struct RemoteHealth {
  int http_status = 0;  // 0 when the service is unreachable
  std::string status;
  std::string model_id;
};

class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(RemoteGeneratorConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))), slots_(static_cast<std::ptrdiff_t>(cfg_.max_in_flight)) {}

  std::size_t sample_dim() const override { return cfg_.width * cfg_.height * 3; }

  bool supports(int label) const override {
    return label >= 0 && static_cast<std::size_t>(label) < cfg_.class_names.size();
  }

  /// Identical prompts are batched into requests of at most max_batch
  /// images; samples come back in prompt order. Request seeds are drawn from
  /// `rng` up front, so the output is a function of rng and the service.
  std::vector<Sample> generate(const GenerationRequest& request, Rng& rng) const override {
    std::vector<std::string> texts;
    texts.reserve(request.count);
    for (std::size_t i = 0; i < request.count; ++i)
      texts.push_back(request.prompts.empty()
                          ? render_fixed(cfg_.class_names[static_cast<std::size_t>(request.label)])
                          : request.prompts[i].text);

    struct Call {
      std::string prompt;
      std::vector<std::size_t> slots;  // output positions
      std::uint64_t seed = 0;
    };
    std::map<std::string, std::vector<std::size_t>> groups;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto [it, fresh] = groups.try_emplace(texts[i]);
      if (fresh) order.push_back(texts[i]);
      it->second.push_back(i);
    }
    std::vector<Call> calls;
    for (const auto& p : order) {
      const auto& idx = groups[p];
      for (std::size_t b = 0; b < idx.size(); b += cfg_.max_batch) {
        Call c{p, {}, rng.next_u64()};
        c.slots.assign(idx.begin() + static_cast<std::ptrdiff_t>(b),
                       idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), b + cfg_.max_batch)));
        calls.push_back(std::move(c));
      }
    }

    std::vector<Sample> out(request.count);
    parallel_for(calls.size(), cfg_.max_in_flight, [&](std::size_t k) {
      const auto& c = calls[k];
      auto feats = fetch(c.prompt, c.slots.size(), c.seed, request.label);
      for (std::size_t j = 0; j < c.slots.size(); ++j) out[c.slots[j]] = Sample{std::move(feats[j]), request.label};
    });
    return out;
  }

  RemoteHealth health() const {
    httplib::Client cli(cfg_.url);
    cli.set_connection_timeout(5);
    cli.set_read_timeout(5);
    RemoteHealth h;
    auto res = cli.Get("/health");
    if (!res) return h;
    h.http_status = res->status;
    try {
      const auto j = nlohmann::json::parse(res->body);
      h.status = j.value("status", "");
      h.model_id = j.value("model_id", "");
    } catch (const nlohmann::json::exception&) {
    }
    return h;
  }

  const RemoteGeneratorConfig& config() const noexcept { return cfg_; }
  std::size_t requests_sent() const noexcept { return requests_.load(); }
  std::string last_model_id() const {
    std::lock_guard lock(meta_mutex_);
    return model_id_;
  }

 private:
  /// One request with retries on transport failures and 5xx replies.
  std::vector<std::vector<double>> fetch(const std::string& prompt, std::size_t n, std::uint64_t seed,
                                         int label) const {
    nlohmann::json body{{"prompt", prompt},
                        {"n", n},
                        {"num_inference_steps", cfg_.num_inference_steps},
                        {"guidance_scale", cfg_.guidance_scale},
                        {"seed", seed}};
    if (cfg_.send_target_size) body["target_size"] = {cfg_.width, cfg_.height};
    const std::string payload = body.dump();

    std::string last_error;
    std::size_t backoff = cfg_.backoff_ms;
    for (std::size_t attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff *= 2;
      }
      slots_.acquire();
      httplib::Result res = [&] {
        httplib::Client cli(cfg_.url);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(static_cast<time_t>(cfg_.timeout_s));
        cli.set_write_timeout(30);
        ++requests_;
        return cli.Post("/generate", payload, "application/json");
      }();
      slots_.release();

      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "service returned HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw GenerationError(label, attempt, "service rejected request with HTTP " + std::to_string(res->status) +
                                                  ": " + res->body.substr(0, 200));
      return decode_response(res->body, n, label, attempt);
    }
    throw GenerationError(label, cfg_.max_attempts, last_error);
  }

  std::vector<std::vector<double>> decode_response(const std::string& text, std::size_t n, int label,
                                                   std::size_t attempt) const {
    std::vector<std::vector<double>> feats;
    try {
      const auto j = nlohmann::json::parse(text);
      const auto& images = j.at("images");
      if (!images.is_array() || images.size() != n)
        throw GenerationError(label, attempt,
                              "service returned " + std::to_string(images.size()) + " images, expected " +
                                  std::to_string(n));
      if (j.contains("model_id") && j["model_id"].is_string()) {
        std::lock_guard lock(meta_mutex_);
        model_id_ = j["model_id"].get<std::string>();
      }
      for (const auto& b64 : images) {
        const auto img = decode_png_rgb(base64_decode(b64.get<std::string>()));
        auto f = resize_bilinear(img, cfg_.width, cfg_.height);
        for (auto& v : f) v /= 255.0;
        feats.push_back(std::move(f));
      }
    } catch (const GenerationError&) {
      throw;
    } catch (const std::exception& e) {
      throw GenerationError(label, attempt, std::string("malformed response: ") + e.what());
    }
    return feats;
  }

  RemoteGeneratorConfig cfg_;
  mutable std::counting_semaphore<> slots_;
  mutable std::atomic<std::size_t> requests_{0};
  mutable std::mutex meta_mutex_;
  mutable std::string model_id_;
};

}  // namespace fedsd
