// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "annotrack/backends/provider.hpp"
#include "annotrack/nms.hpp"
#include "annotrack/raster.hpp"
#include "annotrack/store.hpp"

namespace annotrack {

struct DetectConfig {
  double min_confidence = 0.5;
  double margin_frac = 0.05;  // of the detector input extent
  bool argmax_only = false;
  NmsConfig nms;

  void validate() const;
};

/// Drops detections (detector-input coordinates) that come closer than
/// margin_frac * input extent to a tile edge, except at edges the tile
/// shares with the frame border.
std::vector<Detection> remove_truncated(std::span<const Detection> detections, const BBox& tile,
                                        const Size2D& frame_size, const Size2D& input_size,
                                        double margin_frac);

/// One ScoredBox per class clearing min_confidence (or only the best class
/// with argmax_only).
std::vector<ScoredBox> to_scored(std::span<const Detection> detections, const DetectConfig& cfg,
                                 int source);

/// Full tiled pipeline over the pyramid of `frame`. `frame_index` is passed
/// to the provider as a hint.
std::vector<ScoredBox> detect_frame(const Frame& frame, std::size_t frame_index,
                                    DetectorProvider& detector, const DetectConfig& cfg);

/// Same pipeline over explicit tiles, evaluated in `order` (a permutation of
/// tile indices; empty means ascending). The result does not depend on it.
std::vector<ScoredBox> detect_tiles(const Frame& frame, std::size_t frame_index,
                                    std::span<const BBox> tiles, DetectorProvider& detector,
                                    const DetectConfig& cfg, std::span<const std::size_t> order = {});

/// detect_frame, then exclusive suppression against `existing`; survivors
/// become new tracked-enabled annotations with fresh instance labels.
std::vector<Annotation> auto_annotate(std::size_t frame_index, const Frame& frame,
                                      std::span<const Annotation> existing, DetectorProvider& detector,
                                      const DetectConfig& cfg, InstanceIdGenerator& ids);

}  // namespace annotrack
