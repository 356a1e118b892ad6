// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "annotrack/geometry.hpp"

namespace annotrack {

/// Multi-scale tile pyramid. Layer 0 is the whole frame; layer l >= 1 holds
/// square tiles of side ceil(max(X, Y) / 2^l) at 50% overlap.
struct TileSet {
  std::vector<std::vector<BBox>> layers;
  Size2D tile_target;

  std::size_t tile_count() const;
  /// All tiles, layers ascending then row-major; indices used as tile tags.
  std::vector<BBox> flatten() const;
};

TileSet tile(const Size2D& frame_size, const Size2D& min_tile);

}  // namespace annotrack
