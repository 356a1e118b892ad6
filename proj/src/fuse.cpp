// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/fuse.hpp"

#include <vector>

#include "annotrack/errors.hpp"

namespace annotrack {

void FusionConfig::validate() const {
  for (double v : {gate_iou, detector_weight, min_det_confidence}) {
    if (v < 0.0 || v > 1.0) throw Error(ErrorCode::kInvalidArgument, "fusion parameters must lie in [0, 1]");
  }
}

std::optional<std::size_t> select_candidate(const BBox& reference, std::span<const BBox> candidates,
                                            std::span<const double> confidences) {
  std::optional<std::size_t> best;
  double best_iou = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = iou(reference, candidates[i]);
    if (v > best_iou || (v == best_iou && confidences[i] > confidences[*best])) {
      best = i;
      best_iou = v;
    }
  }
  return best;
}

FusedStepResult fused_step(const Frame& current, const Frame& next, std::size_t current_index,
                           const Annotation& ann, const TrackState& state, TrackerProvider& tracker,
                           DetectorProvider& detector, const FusionConfig& cfg) {
  cfg.validate();
  TrackStepResult tracked = track_step(current, next, current_index, ann, state, tracker);

  FusedStepResult result{tracked.proposal, std::move(tracked.state), {}};
  result.report.tracker_box = tracked.proposal;

  const DetectorInfo& info = detector.info();
  const BBox region = tracked.region.as_box();
  std::vector<Detection> detections;
  try {
    detections = detector.detect(provider_crop(next, tracked.region, info.input_size),
                                 ProviderHint{current_index + 1, region});
  } catch (const std::exception& e) {
    result.report.detector_failed = true;
    result.report.warning = std::string("detector unavailable, tracker only: ") + e.what();
    return result;
  }

  std::vector<BBox> boxes;
  std::vector<double> confidences;
  for (const Detection& d : detections) {
    if (d.max_score() < cfg.min_det_confidence) continue;
    boxes.push_back(map_out_of_crop(map_between_scales(d.box, info.input_size, region.size()), region));
    confidences.push_back(d.max_score());
  }
  const auto pick = select_candidate(tracked.proposal, boxes, confidences);
  if (!pick) return result;

  const BBox& found = boxes[*pick];
  result.report.detector_box = found;
  result.report.iou = iou(tracked.proposal, found);
  if (result.report.iou >= cfg.gate_iou) {
    result.report.gate_fired = true;
    result.proposal = blend(tracked.proposal, found, cfg.detector_weight);
  }
  return result;
}

}  // namespace annotrack
