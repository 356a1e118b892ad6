// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "annotrack/raster.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "annotrack/errors.hpp"

namespace annotrack {

Frame::Frame(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1)
    throw Error(ErrorCode::kDegenerateRegion, "frame must be at least 1x1");
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

Frame::Frame(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), data_(std::move(rgb)) {
  if (width < 1 || height < 1)
    throw Error(ErrorCode::kDegenerateRegion, "frame must be at least 1x1");
  if (data_.size() != static_cast<std::size_t>(width) * height * 3)
    throw Error(ErrorCode::kInvalidArgument, "pixel buffer does not match frame size");
}

PixelRegion quantize(const BBox& region) {
  return {static_cast<int>(std::floor(region.x)), static_cast<int>(std::floor(region.y)),
          static_cast<int>(std::lround(region.w)), static_cast<int>(std::lround(region.h))};
}

Frame crop(const Frame& frame, const BBox& region, bool zero_pad) {
  const PixelRegion r = quantize(region);
  if (r.w < 1 || r.h < 1) {
    std::ostringstream msg;
    msg << "crop region " << region << " rounds to an empty raster";
    throw Error(ErrorCode::kDegenerateRegion, msg.str());
  }
  const bool inside = r.x >= 0 && r.y >= 0 && r.x + r.w <= frame.width() &&
                      r.y + r.h <= frame.height();
  if (!zero_pad && !inside) {
    std::ostringstream msg;
    msg << "crop region " << region << " exceeds frame " << frame.size();
    throw Error(ErrorCode::kRegionOutsideFrame, msg.str());
  }

  Frame out(r.w, r.h);
  const auto src = frame.bytes();
  auto dst = out.bytes();
  // Copy the overlapping span row by row; the rest stays black.
  const int x0 = std::max(0, r.x);
  const int x1 = std::min(frame.width(), r.x + r.w);
  if (x1 <= x0) return out;
  const std::size_t run = static_cast<std::size_t>(x1 - x0) * 3;
  for (int yc = 0; yc < r.h; ++yc) {
    const int ys = yc + r.y;
    if (ys < 0 || ys >= frame.height()) continue;
    const std::size_t s = (static_cast<std::size_t>(ys) * frame.width() + x0) * 3;
    const std::size_t d = (static_cast<std::size_t>(yc) * r.w + (x0 - r.x)) * 3;
    std::copy_n(src.begin() + s, run, dst.begin() + d);
  }
  return out;
}

namespace {

Frame scale_floor(const Frame& in, int tw, int th) {
  Frame out(tw, th);
  const long long sw = in.width();
  const long long sh = in.height();
  for (int ys = 0; ys < th; ++ys) {
    const int y = static_cast<int>(ys * sh / th);
    for (int xs = 0; xs < tw; ++xs) {
      out.set(xs, ys, in.at(static_cast<int>(xs * sw / tw), y));
    }
  }
  return out;
}

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> bilinear_taps(int source, int target) {
  std::vector<Tap> taps(target);
  const double ratio = double(source) / double(target);
  for (int i = 0; i < target; ++i) {
    double u = (i + 0.5) * ratio - 0.5;
    u = std::clamp(u, 0.0, double(source - 1));
    const int lo = static_cast<int>(std::floor(u));
    const int hi = std::min(lo + 1, source - 1);
    taps[i] = {lo, hi, u - lo};
  }
  return taps;
}

Frame scale_bilinear(const Frame& in, int tw, int th) {
  Frame out(tw, th);
  const auto tx = bilinear_taps(in.width(), tw);
  const auto ty = bilinear_taps(in.height(), th);
  for (int ys = 0; ys < th; ++ys) {
    const Tap& vy = ty[ys];
    for (int xs = 0; xs < tw; ++xs) {
      const Tap& vx = tx[xs];
      const Rgb p00 = in.at(vx.lo, vy.lo);
      const Rgb p10 = in.at(vx.hi, vy.lo);
      const Rgb p01 = in.at(vx.lo, vy.hi);
      const Rgb p11 = in.at(vx.hi, vy.hi);
      Rgb v;
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + vx.frac * (p10[c] - p00[c]);
        const double bot = p01[c] + vx.frac * (p11[c] - p01[c]);
        v[c] = static_cast<std::uint8_t>(std::clamp(std::lround(top + vy.frac * (bot - top)), 0L, 255L));
      }
      out.set(xs, ys, v);
    }
  }
  return out;
}

}  // namespace

Frame scale(const Frame& frame, const Size2D& target, ScaleMode mode) {
  const long tw = std::lround(target.w);
  const long th = std::lround(target.h);
  if (tw < 1 || th < 1) {
    std::ostringstream msg;
    msg << "scale target " << target << " is degenerate";
    throw Error(ErrorCode::kDegenerateRegion, msg.str());
  }
  if (tw == frame.width() && th == frame.height()) return frame;
  return mode == ScaleMode::kFloorRemap ? scale_floor(frame, int(tw), int(th))
                                        : scale_bilinear(frame, int(tw), int(th));
}

}  // namespace annotrack
