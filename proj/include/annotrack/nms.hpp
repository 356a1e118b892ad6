// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

// Batched non-maximum suppression expressed as dense matrix operations.
//
// For L candidates of one class, sorted by confidence q:
//   J  = pairwise IOU (L x L)
//   D  = [J > threshold]            (boolean, unit diagonal)
//   D^ = D * diag(q)                (column n scaled by q_n)
// Candidate l survives iff the maximum of row l of D^ is its own q_l, i.e.
// no overlapping candidate scores higher. Exact score ties go to the
// candidate earlier in sort order.
//
// This is not greedy NMS: in a chain A-B-C where only neighbours overlap and
// q_A > q_B > q_C, greedy NMS keeps A and C, this rule keeps only A.

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

#include "annotrack/geometry.hpp"

namespace annotrack {

struct ScoredBox {
  BBox box;
  double score = 0.0;
  int class_id = 0;
  int source = -1;  // tile index, diagnostics only

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

struct NmsConfig {
  double iou_threshold = 0.5;
  std::size_t cap = 5000;
  double exclusion_iou = 0.5;

  void validate() const;
};

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

Eigen::MatrixXd iou_matrix(std::span<const BBox> boxes);
BoolMatrix overlap_matrix(const Eigen::MatrixXd& ious, double threshold);
Eigen::MatrixXd scaled_overlap(const BoolMatrix& overlap, const Eigen::VectorXd& scores);

/// Row-maximum test on D^. Index order is the tie-break priority.
std::vector<bool> select_row_maxima(const BoolMatrix& overlap, const Eigen::VectorXd& scores);

/// Strict weak order used before suppression: score descending, then x, y,
/// w, h ascending. Equal keys keep their input order.
bool nms_order(const ScoredBox& a, const ScoredBox& b);

/// Per-class matrix NMS. Output is grouped by ascending class_id, each group
/// in nms_order.
std::vector<ScoredBox> matrix_nms(std::span<const ScoredBox> candidates, const NmsConfig& cfg);

/// Drops candidates whose IOU with any existing box is >= cfg.exclusion_iou,
/// regardless of class.
std::vector<ScoredBox> exclusive_filter(std::span<const ScoredBox> candidates,
                                        std::span<const BBox> existing, const NmsConfig& cfg);

}  // namespace annotrack
