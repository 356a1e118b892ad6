// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/tiling.hpp"

#include <algorithm>
#include <cmath>

#include "annotrack/errors.hpp"

namespace annotrack {
namespace {

struct AxisPlacement {
  std::vector<double> positions;
  long extent;
};

// Positions k * side / 2, with the last tile pulled back to abut the edge.
AxisPlacement place_axis(long frame_extent, long side) {
  if (frame_extent <= side) return {{0.0}, frame_extent};
  AxisPlacement placement{{}, side};
  // in half pixels: k * side + 2 * side < 2 * frame_extent
  for (long k = 0; (k + 2) * side < 2 * frame_extent; ++k) placement.positions.push_back(0.5 * double(k * side));
  placement.positions.push_back(double(frame_extent - side));
  return placement;
}

}  // namespace

std::size_t TileSet::tile_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.size();
  return n;
}

std::vector<BBox> TileSet::flatten() const {
  std::vector<BBox> all;
  all.reserve(tile_count());
  for (const auto& layer : layers) all.insert(all.end(), layer.begin(), layer.end());
  return all;
}

TileSet tile(const Size2D& frame_size, const Size2D& min_tile) {
  if (!frame_size.valid() || !min_tile.valid())
    throw Error(ErrorCode::kInvalidArgument, "tile sizes must be positive");
  const long fw = std::lround(frame_size.w);
  const long fh = std::lround(frame_size.h);
  const double smallest = std::min(min_tile.w, min_tile.h);

  TileSet set;
  set.tile_target = min_tile;
  set.layers.push_back({BBox{0, 0, double(fw), double(fh)}});

  const long longest = std::max(fw, fh);
  for (int level = 1;; ++level) {
    const long divisor = 1L << level;
    const long side = (longest + divisor - 1) / divisor;
    if (double(side) < smallest || side < 1) break;
    const AxisPlacement xs = place_axis(fw, side);
    const AxisPlacement ys = place_axis(fh, side);
    std::vector<BBox> layer;
    layer.reserve(xs.positions.size() * ys.positions.size());
    for (double y : ys.positions)
      for (double x : xs.positions) layer.push_back({x, y, double(xs.extent), double(ys.extent)});
    set.layers.push_back(std::move(layer));
    if (side == 1) break;
  }
  return set;
}

}  // namespace annotrack
