// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/detect.hpp"

#include <numeric>
#include <sstream>

#include "annotrack/errors.hpp"
#include "annotrack/tiling.hpp"

namespace annotrack {

void DetectConfig::validate() const {
  if (min_confidence < 0.0 || min_confidence > 1.0)
    throw Error(ErrorCode::kInvalidArgument, "min_confidence must lie in [0, 1]");
  if (margin_frac < 0.0 || margin_frac >= 0.5)
    throw Error(ErrorCode::kInvalidArgument, "margin_frac must lie in [0, 0.5)");
  nms.validate();
}

std::vector<Detection> remove_truncated(std::span<const Detection> detections, const BBox& tile,
                                        const Size2D& frame_size, const Size2D& input_size,
                                        double margin_frac) {
  const double mx = margin_frac * input_size.w;
  const double my = margin_frac * input_size.h;
  const bool left_open = tile.x > 0;
  const bool top_open = tile.y > 0;
  const bool right_open = tile.right() < frame_size.w;
  const bool bottom_open = tile.bottom() < frame_size.h;

  std::vector<Detection> kept;
  for (const Detection& d : detections) {
    const BBox& b = d.box;
    const bool truncated = (left_open && b.x < mx) || (top_open && b.y < my) ||
                           (right_open && b.right() > input_size.w - mx) ||
                           (bottom_open && b.bottom() > input_size.h - my);
    if (!truncated) kept.push_back(d);
  }
  return kept;
}

std::vector<ScoredBox> to_scored(std::span<const Detection> detections, const DetectConfig& cfg,
                                 int source) {
  std::vector<ScoredBox> out;
  for (const Detection& d : detections) {
    if (cfg.argmax_only) {
      const int k = d.best_class();
      if (k >= 0 && d.scores[static_cast<std::size_t>(k)] >= cfg.min_confidence)
        out.push_back({d.box, d.scores[static_cast<std::size_t>(k)], k, source});
      continue;
    }
    for (std::size_t k = 0; k < d.scores.size(); ++k) {
      if (d.scores[k] >= cfg.min_confidence && d.scores[k] > 0.0)
        out.push_back({d.box, d.scores[k], static_cast<int>(k), source});
    }
  }
  return out;
}

std::vector<ScoredBox> detect_tiles(const Frame& frame, std::size_t frame_index,
                                    std::span<const BBox> tiles, DetectorProvider& detector,
                                    const DetectConfig& cfg, std::span<const std::size_t> order) {
  cfg.validate();
  const DetectorInfo& info = detector.info();
  const Size2D frame_size = frame.size();

  std::vector<std::size_t> sequence(tiles.size());
  if (order.empty()) {
    std::iota(sequence.begin(), sequence.end(), std::size_t{0});
  } else {
    if (order.size() != tiles.size()) throw Error(ErrorCode::kInvalidArgument, "tile order must be a permutation");
    sequence.assign(order.begin(), order.end());
  }

  // Per-tile results are slotted by tile index so pooling is order-free.
  std::vector<std::vector<ScoredBox>> per_tile(tiles.size());
  for (const std::size_t t : sequence) {
    const BBox region = quantize(tiles[t]).as_box();
    const Frame input = scale(crop(frame, region, false), info.input_size, ScaleMode::kBilinear);
    std::vector<Detection> raw;
    try {
      raw = detector.detect(input, ProviderHint{frame_index, region});
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "detector failed on tile " << t << ' ' << region << ": " << e.what();
      throw Error(ErrorCode::kProvider, msg.str());
    }
    std::vector<Detection> whole = remove_truncated(raw, region, frame_size, info.input_size, cfg.margin_frac);
    for (Detection& d : whole) {
      d.box = clip_to(map_out_of_crop(map_between_scales(d.box, info.input_size, region.size()), region),
                      frame_size);
    }
    per_tile[t] = to_scored(whole, cfg, static_cast<int>(t));
  }

  std::vector<ScoredBox> pooled;
  for (const auto& boxes : per_tile) pooled.insert(pooled.end(), boxes.begin(), boxes.end());
  return matrix_nms(pooled, cfg.nms);
}

std::vector<ScoredBox> detect_frame(const Frame& frame, std::size_t frame_index,
                                    DetectorProvider& detector, const DetectConfig& cfg) {
  const TileSet tiles = tile(frame.size(), detector.info().input_size);
  return detect_tiles(frame, frame_index, tiles.flatten(), detector, cfg);
}

std::vector<Annotation> auto_annotate(std::size_t frame_index, const Frame& frame,
                                      std::span<const Annotation> existing, DetectorProvider& detector,
                                      const DetectConfig& cfg, InstanceIdGenerator& ids) {
  const std::vector<ScoredBox> found = detect_frame(frame, frame_index, detector, cfg);
  std::vector<BBox> taken;
  taken.reserve(existing.size());
  for (const Annotation& a : existing) taken.push_back(a.box);
  const std::vector<ScoredBox> fresh = exclusive_filter(found, taken, cfg.nms);

  const auto& names = detector.info().class_names;
  std::vector<Annotation> out;
  for (const ScoredBox& s : fresh) {
    if (s.class_id < 0 || s.class_id >= static_cast<int>(names.size()))
      throw Error(ErrorCode::kProvider, "detector reported an undeclared class");
    Annotation a;
    a.label = ids.next(names[static_cast<std::size_t>(s.class_id)]);
    a.box = s.box;
    a.tracking_enabled = true;
    a.provenance = Provenance::kDetected;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace annotrack
