// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "annotrack/geometry.hpp"
#include "annotrack/raster.hpp"

namespace annotrack {

/// Where a provider input came from. Neural providers ignore it; the
/// synthetic providers use it to look up ground truth.
struct ProviderHint {
  std::optional<std::size_t> frame;  // index of the (first) frame the input was cut from
  std::optional<BBox> region;        // integer crop region in frame coordinates

  friend bool operator==(const ProviderHint&, const ProviderHint&) = default;
};

struct DetectorInfo {
  Size2D input_size{300, 300};
  std::vector<std::string> class_names;
  double default_confidence = 0.5;

  void validate() const;
  friend bool operator==(const DetectorInfo&, const DetectorInfo&) = default;
};

/// One detector output: a box in detector-input coordinates plus one
/// confidence per class.
struct Detection {
  BBox box;
  std::vector<double> scores;

  double max_score() const;
  int best_class() const;
  friend bool operator==(const Detection&, const Detection&) = default;
};

class DetectorProvider {
 public:
  virtual ~DetectorProvider() = default;
  virtual const DetectorInfo& info() const = 0;
  /// `input` is already scaled to info().input_size.
  virtual std::vector<Detection> detect(const Frame& input, const ProviderHint& hint) = 0;
};

struct TrackerInfo {
  Size2D input_size{128, 128};
  friend bool operator==(const TrackerInfo&, const TrackerInfo&) = default;
};

struct TrackerOutput {
  BBox box;  // in tracker-input coordinates of `next`
  std::vector<std::uint8_t> memory;
};

/// Recurrent single-object tracker. Both crops cover the same region (twice
/// the object extent, object centered in `previous`) and are scaled to
/// info().input_size. An empty `memory` is the zero state: the call
/// initializes the tracker and callers pass the same crop twice.
class TrackerProvider {
 public:
  virtual ~TrackerProvider() = default;
  virtual const TrackerInfo& info() const = 0;
  virtual TrackerOutput track(const Frame& previous, const Frame& next,
                              std::span<const std::uint8_t> memory, const ProviderHint& hint) = 0;
  /// Frees provider-side resources referenced by `memory`, if any.
  virtual void release(std::span<const std::uint8_t> memory) { (void)memory; }
};

}  // namespace annotrack
