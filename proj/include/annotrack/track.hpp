// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "annotrack/backends/provider.hpp"
#include "annotrack/raster.hpp"
#include "annotrack/store.hpp"

namespace annotrack {

/// Recurrent tracker memory for one instance. `memory` is opaque here.
struct TrackState {
  std::string instance_id;
  std::vector<std::uint8_t> memory;
  std::size_t last_frame = 0;

  friend bool operator==(const TrackState&, const TrackState&) = default;
};

/// Region twice the size of `box`, centered on it:
/// [x - floor(w/2), y - floor(h/2), 2w, 2h].
BBox track_region(const BBox& box);

/// Pixel region actually cropped for `box`; the tracker and the fusion
/// detector both see exactly this region.
PixelRegion track_crop_region(const BBox& box);

/// Crop of `frame` at `region` (zero padded) scaled to `input_size`.
Frame provider_crop(const Frame& frame, const PixelRegion& region, const Size2D& input_size);

/// Initializes tracker memory from `ann` in the frame it is annotated in:
/// the provider sees the same crop twice and the zero state.
TrackState track_init(const Frame& frame, std::size_t frame_index, const Annotation& ann,
                      TrackerProvider& tracker);

struct TrackStepResult {
  BBox proposal;  // frame coordinates of the next frame
  TrackState state;
  PixelRegion region;
};

/// One transition current -> next. Throws kStaleState unless
/// state.last_frame == current_index.
TrackStepResult track_step(const Frame& current, const Frame& next, std::size_t current_index,
                           const Annotation& ann, const TrackState& state, TrackerProvider& tracker);

/// Baseline: the next frame gets copies of the current annotations.
std::vector<Annotation> pseudo_track(std::span<const Annotation> annotations);

}  // namespace annotrack
