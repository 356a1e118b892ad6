// Copyright 2026 The annotrack Authors
// SPDX-License-Identifier: Apache-2.0

// Box algebra in continuous pixel coordinates (origin upper-left, +x right,
// +y down). Boxes are half-open: [x, x+w) x [y, y+h).

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace annotrack {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct BasicSize {
  Scalar w{};
  Scalar h{};

  bool valid() const { return w > Scalar(0) && h > Scalar(0); }
  friend bool operator==(const BasicSize&, const BasicSize&) = default;
};

template <typename Scalar>
struct BasicBox {
  using Vector = Eigen::Matrix<Scalar, 4, 1>;

  Scalar x{};
  Scalar y{};
  Scalar w{};
  Scalar h{};

  static BasicBox from_vector(const Vector& v) { return {v[0], v[1], v[2], v[3]}; }
  static BasicBox from_corners(Scalar x0, Scalar y0, Scalar x1, Scalar y1) {
    return {x0, y0, x1 - x0, y1 - y0};
  }

  Vector as_vector() const { return Vector(x, y, w, h); }
  Point2<Scalar> origin() const { return {x, y}; }
  Point2<Scalar> center() const { return {x + w / Scalar(2), y + h / Scalar(2)}; }
  BasicSize<Scalar> size() const { return {w, h}; }
  Scalar right() const { return x + w; }
  Scalar bottom() const { return y + h; }
  Scalar area() const { return w * h; }

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
           std::isfinite(h) && w >= Scalar(0) && h >= Scalar(0);
  }

  friend bool operator==(const BasicBox&, const BasicBox&) = default;
};

using BBox = BasicBox<double>;
using Size2D = BasicSize<double>;
using Point = Point2<double>;

template <typename Scalar>
std::ostream& operator<<(std::ostream& os, const BasicBox<Scalar>& b) {
  return os << '[' << b.x << ' ' << b.y << ' ' << b.w << ' ' << b.h << ']';
}

template <typename Scalar>
std::ostream& operator<<(std::ostream& os, const BasicSize<Scalar>& s) {
  return os << s.w << 'x' << s.h;
}

template <typename Scalar>
BasicBox<Scalar> intersection(const BasicBox<Scalar>& a, const BasicBox<Scalar>& b) {
  const Scalar x0 = std::max(a.x, b.x);
  const Scalar y0 = std::max(a.y, b.y);
  const Scalar x1 = std::min(a.right(), b.right());
  const Scalar y1 = std::min(a.bottom(), b.bottom());
  return {x0, y0, std::max(Scalar(0), x1 - x0), std::max(Scalar(0), y1 - y0)};
}

/// Intersection over union. Zero when the union has no area.
template <typename Scalar>
Scalar iou(const BasicBox<Scalar>& a, const BasicBox<Scalar>& b) {
  const Scalar inter = intersection(a, b).area();
  const Scalar uni = a.area() + b.area() - inter;
  if (!(uni > Scalar(0))) return Scalar(0);
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

/// Image coordinates -> coordinates relative to the crop origin.
template <typename Scalar>
BasicBox<Scalar> map_into_crop(const BasicBox<Scalar>& b, const BasicBox<Scalar>& crop) {
  return {b.x - crop.x, b.y - crop.y, b.w, b.h};
}

template <typename Scalar>
Point2<Scalar> map_into_crop(const Point2<Scalar>& p, const BasicBox<Scalar>& crop) {
  return p - crop.origin();
}

/// Inverse of map_into_crop.
template <typename Scalar>
BasicBox<Scalar> map_out_of_crop(const BasicBox<Scalar>& b, const BasicBox<Scalar>& crop) {
  return {b.x + crop.x, b.y + crop.y, b.w, b.h};
}

template <typename Scalar>
Point2<Scalar> map_out_of_crop(const Point2<Scalar>& p, const BasicBox<Scalar>& crop) {
  return p + crop.origin();
}

/// Rescales from a raster of size `from` to one of size `to`. Swapping the
/// two sizes gives the inverse mapping.
template <typename Scalar>
BasicBox<Scalar> map_between_scales(const BasicBox<Scalar>& b, const BasicSize<Scalar>& from,
                                    const BasicSize<Scalar>& to) {
  const Scalar sx = to.w / from.w;
  const Scalar sy = to.h / from.h;
  return {b.x * sx, b.y * sy, b.w * sx, b.h * sy};
}

template <typename Scalar>
Point2<Scalar> map_between_scales(const Point2<Scalar>& p, const BasicSize<Scalar>& from,
                                  const BasicSize<Scalar>& to) {
  return {p.x() * (to.w / from.w), p.y() * (to.h / from.h)};
}

/// Clips `b` to the frame [0, size.w) x [0, size.h).
template <typename Scalar>
BasicBox<Scalar> clip_to(const BasicBox<Scalar>& b, const BasicSize<Scalar>& size) {
  return intersection(b, BasicBox<Scalar>{Scalar(0), Scalar(0), size.w, size.h});
}

/// True when `inner` lies inside `outer` expanded by `slack` on every side.
template <typename Scalar>
bool contains(const BasicBox<Scalar>& outer, const BasicBox<Scalar>& inner,
              Scalar slack = Scalar(0)) {
  return inner.x >= outer.x - slack && inner.y >= outer.y - slack &&
         inner.right() <= outer.right() + slack && inner.bottom() <= outer.bottom() + slack;
}

}  // namespace annotrack
