// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/track.hpp"

#include <cmath>
#include <sstream>

#include "annotrack/errors.hpp"

namespace annotrack {

BBox track_region(const BBox& box) {
  if (!box.valid() || box.w < 1.0 || box.h < 1.0) {
    std::ostringstream msg;
    msg << "cannot track degenerate box " << box;
    throw Error(ErrorCode::kDegenerateBox, msg.str());
  }
  return {box.x - std::floor(box.w / 2), box.y - std::floor(box.h / 2), 2 * box.w, 2 * box.h};
}

PixelRegion track_crop_region(const BBox& box) { return quantize(track_region(box)); }

Frame provider_crop(const Frame& frame, const PixelRegion& region, const Size2D& input_size) {
  return scale(crop(frame, region.as_box(), true), input_size, ScaleMode::kBilinear);
}

namespace {

TrackerOutput invoke(TrackerProvider& tracker, const Frame& previous, const Frame& next,
                     std::span<const std::uint8_t> memory, const ProviderHint& hint) {
  try {
    return tracker.track(previous, next, memory, hint);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kStaleState) throw;
    throw Error(ErrorCode::kProvider, std::string("tracker failed: ") + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kProvider, std::string("tracker failed: ") + e.what());
  }
}

}  // namespace

TrackState track_init(const Frame& frame, std::size_t frame_index, const Annotation& ann,
                      TrackerProvider& tracker) {
  const PixelRegion region = track_crop_region(ann.box);
  const Frame patch = provider_crop(frame, region, tracker.info().input_size);
  TrackerOutput out = invoke(tracker, patch, patch, {}, ProviderHint{frame_index, region.as_box()});
  return {ann.label.instance_id, std::move(out.memory), frame_index};
}

TrackStepResult track_step(const Frame& current, const Frame& next, std::size_t current_index,
                           const Annotation& ann, const TrackState& state, TrackerProvider& tracker) {
  if (state.last_frame != current_index) {
    throw Error(ErrorCode::kStaleState, "tracker state for " + state.instance_id + " is at frame " +
                                            std::to_string(state.last_frame) + ", not " +
                                            std::to_string(current_index));
  }
  if (state.instance_id != ann.label.instance_id)
    throw Error(ErrorCode::kInvalidArgument, "tracker state belongs to another instance");
  if (current.width() != next.width() || current.height() != next.height())
    throw Error(ErrorCode::kInvalidArgument, "consecutive frames differ in size");

  const PixelRegion region = track_crop_region(ann.box);
  const Size2D input = tracker.info().input_size;
  const Frame before = provider_crop(current, region, input);
  const Frame after = provider_crop(next, region, input);
  TrackerOutput out = invoke(tracker, before, after, state.memory, ProviderHint{current_index, region.as_box()});

  const BBox crop_box = region.as_box();
  const BBox local = map_between_scales(out.box, input, crop_box.size());
  return {map_out_of_crop(local, crop_box), TrackState{state.instance_id, std::move(out.memory), current_index + 1},
          region};
}

std::vector<Annotation> pseudo_track(std::span<const Annotation> annotations) {
  return {annotations.begin(), annotations.end()};
}

}  // namespace annotrack
