#pragma once

// Class-label → text-prompt rendering with a fixed template or a template
// drawn per image from a pool.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "fedsd/error.hpp"
#include "fedsd/rng.hpp"

namespace fedsd {

inline constexpr std::string_view kClassPlaceholder = "{class}";

class PromptTemplate {
 public:
  explicit PromptTemplate(std::string pattern) : pattern_(std::move(pattern)) {
    if (pattern_.empty()) throw ConfigError("prompts", "template is empty");
    const auto first = pattern_.find(kClassPlaceholder);
    if (first == std::string::npos)
      throw ConfigError("prompts", "template '" + pattern_ + "' has no {class} placeholder");
    if (pattern_.find(kClassPlaceholder, first + 1) != std::string::npos)
      throw ConfigError("prompts", "template '" + pattern_ + "' has more than one {class} placeholder");
  }

  const std::string& pattern() const noexcept { return pattern_; }

  /// Stable identifier independent of pool ordering.
  std::uint64_t id() const noexcept { return fnv1a64(pattern_); }

  std::string render(std::string_view label_name) const {
    if (label_name.empty()) throw ConfigError("prompts", "label name is empty");
    std::string out = pattern_;
    out.replace(out.find(kClassPlaceholder), kClassPlaceholder.size(), label_name);
    return out;
  }

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;

 private:
  std::string pattern_;
};

class PromptPool {
 public:
  explicit PromptPool(std::vector<PromptTemplate> templates) : templates_(std::move(templates)) {
    if (templates_.empty()) throw ConfigError("prompts", "template pool is empty");
    for (std::size_t i = 0; i < templates_.size(); ++i)
      for (std::size_t j = i + 1; j < templates_.size(); ++j)
        if (templates_[i] == templates_[j])
          throw ConfigError("prompts", "duplicate template '" + templates_[i].pattern() + "'");
  }

  std::size_t size() const noexcept { return templates_.size(); }
  const PromptTemplate& operator[](std::size_t i) const { return templates_.at(i); }
  const std::vector<PromptTemplate>& templates() const noexcept { return templates_; }

 private:
  std::vector<PromptTemplate> templates_;
};

/// The 18 CLIP-style CIFAR templates.
inline const std::vector<std::string>& default_template_patterns() {
  static const std::vector<std::string> patterns = {
      "a photo of a {class}.",
      "a blurry photo of a {class}.",
      "a black and white photo of a {class}.",
      "a low contrast photo of a {class}.",
      "a high contrast photo of a {class}.",
      "a bad photo of a {class}.",
      "a good photo of a {class}.",
      "a photo of a small {class}.",
      "a photo of a big {class}.",
      "a photo of the {class}.",
      "a blurry photo of the {class}.",
      "a black and white photo of the {class}.",
      "a low contrast photo of the {class}.",
      "a high contrast photo of the {class}.",
      "a bad photo of the {class}.",
      "a good photo of the {class}.",
      "a photo of the small {class}.",
      "a photo of the big {class}.",
  };
  return patterns;
}

inline PromptPool default_prompt_pool() {
  std::vector<PromptTemplate> t;
  for (const auto& p : default_template_patterns()) t.emplace_back(p);
  return PromptPool(std::move(t));
}

inline const PromptTemplate& fixed_template() {
  static const PromptTemplate t(default_template_patterns().front());
  return t;
}

/// One template per non-blank line; surrounding whitespace and a trailing
/// CR are stripped.
inline PromptPool load_prompt_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("prompts.pool_file", "cannot open " + path.string());
  std::vector<PromptTemplate> templates;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    templates.emplace_back(line.substr(b, e - b + 1));
  }
  return PromptPool(std::move(templates));
}

/// "a photo of a {class}." with the label substituted.
inline std::string render_fixed(std::string_view label_name) {
  return fixed_template().render(label_name);
}

/// A template chosen uniformly from `pool`, with the label substituted.
inline std::string render_diverse(std::string_view label_name, const PromptPool& pool, Rng& rng) {
  return pool[rng.below(pool.size())].render(label_name);
}

struct Prompt {
  std::string text;
  std::uint64_t template_id = 0;
};

enum class PromptDesign { fixed, diverse };

/// Renders per-image prompts for a class under a prompt design.
class PromptRenderer {
 public:
  PromptRenderer(std::vector<std::string> class_names, PromptDesign design,
                 PromptPool pool = default_prompt_pool())
      : names_(std::move(class_names)), design_(design), pool_(std::move(pool)) {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i].empty())
        throw ConfigError("dataset.class_names[" + std::to_string(i) + "]", "class name is empty");
  }

  PromptDesign design() const noexcept { return design_; }
  const std::vector<std::string>& class_names() const noexcept { return names_; }
  const PromptPool& pool() const noexcept { return pool_; }

  const std::string& name_of(int label) const {
    if (label < 0 || static_cast<std::size_t>(label) >= names_.size())
      throw ConfigError("dataset.class_names", "no name for class " + std::to_string(label));
    return names_[static_cast<std::size_t>(label)];
  }

  /// One prompt per image; the diverse design draws a template per image.
  std::vector<Prompt> render(int label, std::size_t count, Rng& rng) const {
    const auto& name = name_of(label);
    std::vector<Prompt> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const PromptTemplate& t =
          design_ == PromptDesign::fixed ? fixed_template() : pool_[rng.below(pool_.size())];
      out.push_back({t.render(name), t.id()});
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  PromptDesign design_;
  PromptPool pool_;
};

inline const std::vector<std::string>& cifar10_class_names() {
  static const std::vector<std::string> names = {"airplane", "automobile", "bird", "cat", "deer",
                                                 "dog",      "frog",       "horse", "ship", "truck"};
  return names;
}

}  // namespace fedsd
