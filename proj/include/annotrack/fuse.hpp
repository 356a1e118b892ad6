// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

// Drift compensation: the detector runs once on the tracker's crop of the
// next frame; a detection agreeing with the tracker proposal (IOU >= gate,
// any class) pulls the proposal toward itself.

#pragma once

#include <optional>
#include <span>
#include <string>

#include "annotrack/backends/provider.hpp"
#include "annotrack/track.hpp"

namespace annotrack {

struct FusionConfig {
  double gate_iou = 0.8;
  double detector_weight = 0.5;
  double min_det_confidence = 0.5;

  void validate() const;
};

struct FusionReport {
  bool gate_fired = false;
  double iou = 0.0;  // best candidate vs tracker proposal; 0 without candidates
  BBox tracker_box;
  std::optional<BBox> detector_box;
  bool detector_failed = false;
  std::string warning;
};

struct FusedStepResult {
  BBox proposal;
  TrackState state;
  FusionReport report;
};

/// (1 - w) * tracker + w * detector, elementwise on [x y w h].
template <typename Scalar>
BasicBox<Scalar> blend(const BasicBox<Scalar>& tracker, const BasicBox<Scalar>& detector, Scalar w) {
  return BasicBox<Scalar>::from_vector((Scalar(1) - w) * tracker.as_vector() + w * detector.as_vector());
}

/// Index of the candidate with the highest IOU against `reference`; ties go
/// to the higher confidence, then the earlier candidate.
std::optional<std::size_t> select_candidate(const BBox& reference, std::span<const BBox> candidates,
                                            std::span<const double> confidences);

FusedStepResult fused_step(const Frame& current, const Frame& next, std::size_t current_index,
                           const Annotation& ann, const TrackState& state, TrackerProvider& tracker,
                           DetectorProvider& detector, const FusionConfig& cfg);

}  // namespace annotrack
