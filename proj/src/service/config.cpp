// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/service/config.hpp"

#include <charconv>
#include <sstream>

#include <nlohmann/json.hpp>

#include "annotrack/errors.hpp"

namespace annotrack {

using nlohmann::json;

std::string_view to_string(TrackerVariant v) {
  switch (v) {
    case TrackerVariant::kBaseline: return "baseline";
    case TrackerVariant::kTrackerOnly: return "tracker";
    case TrackerVariant::kFused: return "fused";
  }
  return "fused";
}

std::optional<TrackerVariant> parse_variant(std::string_view text) {
  if (text == "baseline") return TrackerVariant::kBaseline;
  if (text == "tracker" || text == "tracker_only") return TrackerVariant::kTrackerOnly;
  if (text == "fused") return TrackerVariant::kFused;
  return std::nullopt;
}

void EngineConfig::validate() const {
  detect.validate();
  fusion.validate();
}

json to_json(const EngineConfig& cfg) {
  return {
      {"variant", std::string(to_string(cfg.variant))},
      {"nms",
       {{"iou_threshold", cfg.detect.nms.iou_threshold},
        {"cap", cfg.detect.nms.cap},
        {"exclusion_iou", cfg.detect.nms.exclusion_iou}}},
      {"detect",
       {{"min_confidence", cfg.detect.min_confidence},
        {"margin_frac", cfg.detect.margin_frac},
        {"argmax_only", cfg.detect.argmax_only}}},
      {"fusion",
       {{"gate_iou", cfg.fusion.gate_iou},
        {"detector_weight", cfg.fusion.detector_weight},
        {"min_det_confidence", cfg.fusion.min_det_confidence}}},
  };
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); }

template <typename T>
void assign(T& field, const json& value, const std::string& key) {
  try {
    field = value.get<T>();
  } catch (const json::exception&) {
    invalid("config key " + key + " has the wrong type");
  }
}

void apply_one(EngineConfig& cfg, const std::string& section, const std::string& key, const json& value) {
  const std::string full = section.empty() ? key : section + "." + key;
  if (section.empty() && key == "variant") {
    if (!value.is_string()) invalid("variant must be a string");
    const auto v = parse_variant(value.get<std::string>());
    if (!v) invalid("unknown variant \"" + value.get<std::string>() + "\"");
    cfg.variant = *v;
  } else if (section == "nms" && key == "iou_threshold") {
    assign(cfg.detect.nms.iou_threshold, value, full);
  } else if (section == "nms" && key == "cap") {
    if (!value.is_number_integer() || value.get<long long>() < 1) invalid("nms.cap must be a positive integer");
    cfg.detect.nms.cap = value.get<std::size_t>();
  } else if (section == "nms" && key == "exclusion_iou") {
    assign(cfg.detect.nms.exclusion_iou, value, full);
  } else if (section == "detect" && key == "min_confidence") {
    assign(cfg.detect.min_confidence, value, full);
  } else if (section == "detect" && key == "margin_frac") {
    assign(cfg.detect.margin_frac, value, full);
  } else if (section == "detect" && key == "argmax_only") {
    assign(cfg.detect.argmax_only, value, full);
  } else if (section == "fusion" && key == "gate_iou") {
    assign(cfg.fusion.gate_iou, value, full);
  } else if (section == "fusion" && key == "detector_weight") {
    assign(cfg.fusion.detector_weight, value, full);
  } else if (section == "fusion" && key == "min_det_confidence") {
    assign(cfg.fusion.min_det_confidence, value, full);
  } else {
    invalid("unknown config key " + full);
  }
}

}  // namespace

void apply_patch(EngineConfig& cfg, const json& patch) {
  if (!patch.is_object()) invalid("config patch must be an object");
  EngineConfig next = cfg;
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object()) {
      for (const auto& [sub, v] : value.items()) apply_one(next, key, sub, v);
    } else {
      apply_one(next, "", key, value);
    }
  }
  next.validate();
  cfg = next;
}

void apply_config_text(EngineConfig& cfg, std::string_view text, const std::string& origin) {
  json patch = json::object();
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) invalid(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string raw = trim(line.substr(eq + 1));
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') raw = raw.substr(1, raw.size() - 2);

    json value;
    if (raw == "true" || raw == "false") {
      value = raw == "true";
    } else {
      long long integer = 0;
      double real = 0;
      const char* end = raw.data() + raw.size();
      if (auto [p, ec] = std::from_chars(raw.data(), end, integer); ec == std::errc() && p == end) {
        value = integer;
      } else if (auto [q, ec2] = std::from_chars(raw.data(), end, real); ec2 == std::errc() && q == end) {
        value = real;
      } else {
        value = raw;
      }
    }
    if (const auto dot = key.find('.'); dot != std::string::npos) {
      patch[key.substr(0, dot)][key.substr(dot + 1)] = value;
    } else {
      patch[key] = value;
    }
  }
  try {
    apply_patch(cfg, patch);
  } catch (const Error& e) {
    invalid(origin + ": " + e.what());
  }
}

}  // namespace annotrack
