// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/nms.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "annotrack/errors.hpp"

namespace annotrack {

void NmsConfig::validate() const {
  const auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!unit(iou_threshold) || !unit(exclusion_iou))
    throw Error(ErrorCode::kInvalidArgument, "nms thresholds must lie in (0, 1]");
  if (cap < 1) throw Error(ErrorCode::kInvalidArgument, "nms cap must be >= 1");
}

Eigen::MatrixXd iou_matrix(std::span<const BBox> boxes) {
  const Eigen::Index n = static_cast<Eigen::Index>(boxes.size());
  Eigen::MatrixXd ious(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    ious(m, m) = boxes[m].area() > 0.0 ? 1.0 : 0.0;
    for (Eigen::Index k = m + 1; k < n; ++k) {
      ious(m, k) = ious(k, m) = iou(boxes[m], boxes[k]);
    }
  }
  return ious;
}

BoolMatrix overlap_matrix(const Eigen::MatrixXd& ious, double threshold) {
  BoolMatrix overlap = ious.array() > threshold;
  // d_ll = 1 even for zero-area boxes, whose self-IOU is defined as 0.
  overlap.matrix().diagonal().setConstant(true);
  return overlap;
}

Eigen::MatrixXd scaled_overlap(const BoolMatrix& overlap, const Eigen::VectorXd& scores) {
  return overlap.cast<double>().matrix() * scores.asDiagonal();
}

std::vector<bool> select_row_maxima(const BoolMatrix& overlap, const Eigen::VectorXd& scores) {
  const Eigen::MatrixXd scaled = scaled_overlap(overlap, scores);
  const Eigen::VectorXd row_max = scaled.rowwise().maxCoeff();
  const Eigen::Index n = scores.size();
  std::vector<bool> keep(static_cast<std::size_t>(n));
  for (Eigen::Index l = 0; l < n; ++l) {
    bool is_max = row_max(l) == scores(l);
    for (Eigen::Index j = 0; is_max && j < l; ++j) {
      if (overlap(l, j) && scores(j) == scores(l)) is_max = false;
    }
    keep[static_cast<std::size_t>(l)] = is_max;
  }
  return keep;
}

bool nms_order(const ScoredBox& a, const ScoredBox& b) {
  return std::tuple(-a.score, a.box.x, a.box.y, a.box.w, a.box.h) <
         std::tuple(-b.score, b.box.x, b.box.y, b.box.w, b.box.h);
}

std::vector<ScoredBox> matrix_nms(std::span<const ScoredBox> candidates, const NmsConfig& cfg) {
  cfg.validate();
  std::map<int, std::vector<ScoredBox>> by_class;
  for (const ScoredBox& c : candidates) by_class[c.class_id].push_back(c);

  std::vector<ScoredBox> kept;
  for (auto& [class_id, group] : by_class) {
    std::stable_sort(group.begin(), group.end(), nms_order);
    if (group.size() > cfg.cap) group.resize(cfg.cap);

    std::vector<BBox> boxes(group.size());
    Eigen::VectorXd scores(static_cast<Eigen::Index>(group.size()));
    for (std::size_t i = 0; i < group.size(); ++i) {
      boxes[i] = group[i].box;
      scores(static_cast<Eigen::Index>(i)) = group[i].score;
    }
    const BoolMatrix overlap = overlap_matrix(iou_matrix(boxes), cfg.iou_threshold);
    const std::vector<bool> keep = select_row_maxima(overlap, scores);
    for (std::size_t i = 0; i < group.size(); ++i)
      if (keep[i]) kept.push_back(group[i]);
  }
  return kept;
}

std::vector<ScoredBox> exclusive_filter(std::span<const ScoredBox> candidates,
                                        std::span<const BBox> existing, const NmsConfig& cfg) {
  cfg.validate();
  std::vector<ScoredBox> out;
  for (const ScoredBox& c : candidates) {
    const bool clashes = std::any_of(existing.begin(), existing.end(), [&](const BBox& e) {
      return iou(c.box, e) >= cfg.exclusion_iou;
    });
    if (!clashes) out.push_back(c);
  }
  return out;
}

}  // namespace annotrack
