// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "annotrack/detect.hpp"
#include "annotrack/fuse.hpp"

namespace annotrack {

enum class TrackerVariant { kBaseline, kTrackerOnly, kFused };

std::string_view to_string(TrackerVariant v);
/// Accepts "baseline", "tracker" / "tracker_only", "fused".
std::optional<TrackerVariant> parse_variant(std::string_view text);

struct EngineConfig {
  DetectConfig detect;
  FusionConfig fusion;
  TrackerVariant variant = TrackerVariant::kFused;

  void validate() const;
};

nlohmann::json to_json(const EngineConfig& cfg);
/// Merges the keys present in `patch` (same layout as to_json) into `cfg`.
/// Throws kInvalidArgument on unknown keys or bad values; `cfg` is left
/// untouched on failure.
void apply_patch(EngineConfig& cfg, const nlohmann::json& patch);

/// "key = value" lines, '#' comments, dotted keys matching the JSON layout:
///   variant = fused
///   nms.iou_threshold = 0.5
///   fusion.detector_weight = 0.5
void apply_config_text(EngineConfig& cfg, std::string_view text, const std::string& origin);

}  // namespace annotrack
