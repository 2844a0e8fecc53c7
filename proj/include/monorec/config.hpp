#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "monorec/costvolume.hpp"
#include "monorec/losses.hpp"
#include "monorec/maskgen.hpp"

namespace monorec {

/// Parse or validation failure that names the offending file and field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string file, std::string field, int line, const std::string& message)
      : std::runtime_error(message), file_(std::move(file)), field_(std::move(field)), line_(line) {}

  const std::string& file() const { return file_; }
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string file_;
  std::string field_;
  int line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

/// Shortest text that parses back to the same double.
inline std::string exact_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = std::min(s.find(',', start), s.size());
    const auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

}  // namespace detail

struct PipelineConfig {
  DepthRange depth;
  double alpha_w = kDefaultWeightSharpness;
  LossWeights loss;
  int scales = kDefaultScales;
  MovingThresholds thresholds;
  double match_iou = kDefaultMatchIou;
  double moving_fraction = kDefaultMovingFraction;
  double probability_threshold = kMaskBinarizeThreshold;
  std::vector<std::string> movable_classes{"car"};
  std::uint64_t seed = 7;
  double depth_cap = 80.0;
  std::string bundle;
  std::string output;

  bool operator==(const PipelineConfig& o) const {
    return depth == o.depth && alpha_w == o.alpha_w && loss.lambda == o.loss.lambda && loss.alpha == o.loss.alpha &&
           loss.beta_base == o.loss.beta_base && loss.gamma == o.loss.gamma && scales == o.scales &&
           thresholds.stereo_error == o.thresholds.stereo_error &&
           thresholds.temporal_error == o.thresholds.temporal_error &&
           thresholds.depth_ratio == o.thresholds.depth_ratio && match_iou == o.match_iou &&
           moving_fraction == o.moving_fraction && probability_threshold == o.probability_threshold &&
           movable_classes == o.movable_classes && seed == o.seed && depth_cap == o.depth_cap &&
           bundle == o.bundle && output == o.output;
  }

  /// Throws ConfigError naming the first field out of range.
  void validate(const std::string& file = "<config>") const {
    auto fail = [&](const char* field, const std::string& msg) { throw ConfigError(file, field, 0, msg); };
    try {
      depth.validate();
    } catch (const std::exception& e) {
      fail("depth", e.what());
    }
    if (!(alpha_w > 0.0)) fail("costvolume.alpha_w", "must be > 0");
    try {
      loss.validate();
    } catch (const std::exception& e) {
      fail("loss", e.what());
    }
    if (scales < 1 || scales > 8) fail("loss.scales", "must be in [1, 8]");
    if (!(thresholds.stereo_error > 0.0)) fail("mask.tau1", "must be > 0");
    if (!(thresholds.temporal_error > 0.0)) fail("mask.tau2", "must be > 0");
    if (!(thresholds.depth_ratio > 1.0)) fail("mask.tau3", "must be > 1");
    if (!(match_iou > 0.0 && match_iou <= 1.0)) fail("mask.iou", "must be in (0, 1]");
    if (!(moving_fraction >= 0.0 && moving_fraction < 1.0)) fail("mask.moving_fraction", "must be in [0, 1)");
    if (!(probability_threshold > 0.0 && probability_threshold < 1.0)) {
      fail("mask.probability_threshold", "must be in (0, 1)");
    }
    if (!(depth_cap > 0.0)) fail("eval.cap", "must be > 0");
  }

  AuxMaskSettings aux_settings() const { return {match_iou, moving_fraction, movable_classes}; }

  std::string serialize() const;
  static PipelineConfig parse(std::string_view text, const std::string& file = "<string>");
  static PipelineConfig load(const std::string& path);
};

namespace detail {

struct ConfigEntry {
  const char* key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<bool(PipelineConfig&, std::string_view)> set;
};

template <typename T>
ConfigEntry number_entry(const char* key, T PipelineConfig::*member) {
  return {key,
          [member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return exact_number(c.*member);
            else return std::to_string(c.*member);
          },
          [member](PipelineConfig& c, std::string_view v) { return parse_number(v, c.*member); }};
}

template <typename S, typename T>
ConfigEntry nested_entry(const char* key, S PipelineConfig::*outer, T S::*member) {
  return {key,
          [outer, member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return exact_number(c.*outer.*member);
            else return std::to_string(c.*outer.*member);
          },
          [outer, member](PipelineConfig& c, std::string_view v) { return parse_number(v, c.*outer.*member); }};
}

inline const std::vector<ConfigEntry>& config_entries() {
  static const std::vector<ConfigEntry> entries = {
      nested_entry("depth.d_min", &PipelineConfig::depth, &DepthRange::d_min),
      nested_entry("depth.d_max", &PipelineConfig::depth, &DepthRange::d_max),
      nested_entry("depth.steps", &PipelineConfig::depth, &DepthRange::steps),
      number_entry("costvolume.alpha_w", &PipelineConfig::alpha_w),
      nested_entry("loss.lambda", &PipelineConfig::loss, &LossWeights::lambda),
      nested_entry("loss.alpha", &PipelineConfig::loss, &LossWeights::alpha),
      nested_entry("loss.beta_base", &PipelineConfig::loss, &LossWeights::beta_base),
      nested_entry("loss.gamma", &PipelineConfig::loss, &LossWeights::gamma),
      number_entry("loss.scales", &PipelineConfig::scales),
      nested_entry("mask.tau1", &PipelineConfig::thresholds, &MovingThresholds::stereo_error),
      nested_entry("mask.tau2", &PipelineConfig::thresholds, &MovingThresholds::temporal_error),
      nested_entry("mask.tau3", &PipelineConfig::thresholds, &MovingThresholds::depth_ratio),
      number_entry("mask.iou", &PipelineConfig::match_iou),
      number_entry("mask.moving_fraction", &PipelineConfig::moving_fraction),
      number_entry("mask.probability_threshold", &PipelineConfig::probability_threshold),
      {"mask.movable_classes",
       [](const PipelineConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.movable_classes.size(); ++i) out += (i ? "," : "") + c.movable_classes[i];
         return out;
       },
       [](PipelineConfig& c, std::string_view v) {
         c.movable_classes = split_list(v);
         return true;
       }},
      number_entry("run.seed", &PipelineConfig::seed),
      number_entry("eval.cap", &PipelineConfig::depth_cap),
      {"io.bundle", [](const PipelineConfig& c) { return c.bundle; },
       [](PipelineConfig& c, std::string_view v) {
         c.bundle = std::string(v);
         return true;
       }},
      {"io.output", [](const PipelineConfig& c) { return c.output; },
       [](PipelineConfig& c, std::string_view v) {
         c.output = std::string(v);
         return true;
       }},
  };
  return entries;
}

}  // namespace detail

inline std::string PipelineConfig::serialize() const {
  std::string out;
  for (const auto& e : detail::config_entries()) out += std::string(e.key) + " = " + e.get(*this) + "\n";
  return out;
}

/// `section.key = value` lines; '#' starts a comment. Unknown or repeated
/// keys are errors. Missing keys keep their defaults.
inline PipelineConfig PipelineConfig::parse(std::string_view text, const std::string& file) {
  PipelineConfig c;
  std::vector<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(file, std::string(line), line_no, "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const auto value = detail::trim(line.substr(eq + 1));
    const auto& entries = detail::config_entries();
    const auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return key == e.key; });
    if (it == entries.end()) throw ConfigError(file, key, line_no, "unknown key");
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw ConfigError(file, key, line_no, "duplicate key");
    }
    seen.push_back(key);
    if (!it->set(c, value)) throw ConfigError(file, key, line_no, "cannot parse value '" + std::string(value) + "'");
  }
  c.validate(file);
  return c;
}

inline PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "", 0, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

}  // namespace monorec
