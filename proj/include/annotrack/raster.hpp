// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "annotrack/geometry.hpp"

namespace annotrack {

using Rgb = std::array<std::uint8_t, 3>;

/// Immutable-by-convention 8-bit RGB raster, row-major, no padding.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, Rgb fill = {0, 0, 0});
  Frame(int width, int height, std::vector<std::uint8_t> rgb);

  int width() const { return width_; }
  int height() const { return height_; }
  Size2D size() const { return {double(width_), double(height_)}; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int x, int y, Rgb value) {
    const std::size_t i = index(x, y);
    data_[i] = value[0];
    data_[i + 1] = value[1];
    data_[i + 2] = value[2];
  }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Integer pixel region used for raster access: origin floored, extent
/// rounded to nearest.
struct PixelRegion {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  BBox as_box() const { return {double(x), double(y), double(w), double(h)}; }
  friend bool operator==(const PixelRegion&, const PixelRegion&) = default;
};

PixelRegion quantize(const BBox& region);

/// Submatrix of `frame` at `region`. With `zero_pad`, pixels outside the
/// source are black; without it the region must lie inside the frame.
Frame crop(const Frame& frame, const BBox& region, bool zero_pad);

enum class ScaleMode { kFloorRemap, kBilinear };

/// Resamples to `target` (rounded to whole pixels). kFloorRemap takes the
/// source pixel at floor(xs * X / Xs); kBilinear samples pixel centers with
/// edge clamping.
Frame scale(const Frame& frame, const Size2D& target, ScaleMode mode = ScaleMode::kBilinear);

}  // namespace annotrack
