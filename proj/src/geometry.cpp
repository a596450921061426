#include "zsdbench/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace zsd {

CornerBox to_corners(const BoundingBox& b) {
  return {b.x, b.y, b.x + b.w, b.y + b.h};
}

BoundingBox from_corners(const CornerBox& c) {
  return {c.x1, c.y1, c.x2 - c.x1, c.y2 - c.y1};
}

ValidationResult validate_box(const BoundingBox& b, double image_w, double image_h) {
  ValidationResult result;
  if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) ||
      !std::isfinite(b.h)) {
    result.error = BoxError::NonFiniteField;
    return result;
  }
  if (!(b.w > 0.0) || !(b.h > 0.0)) {
    result.error = BoxError::NonPositiveExtent;
    return result;
  }
  result.out_of_bounds =
      b.x < 0.0 || b.y < 0.0 || b.right() > image_w || b.bottom() > image_h;
  return result;
}

BoundingBox clip_box(const BoundingBox& b, double image_w, double image_h) {
  const CornerBox c = to_corners(b);
  const double x1 = std::clamp(c.x1, 0.0, image_w);
  const double y1 = std::clamp(c.y1, 0.0, image_h);
  const double x2 = std::clamp(c.x2, 0.0, image_w);
  const double y2 = std::clamp(c.y2, 0.0, image_h);
  return from_corners({x1, y1, std::max(x1, x2), std::max(y1, y2)});
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (a == b) return 1.0;
  const CornerBox ca = to_corners(a);
  const CornerBox cb = to_corners(b);
  const double iw = std::min(ca.x2, cb.x2) - std::max(ca.x1, cb.x1);
  const double ih = std::min(ca.y2, cb.y2) - std::max(ca.y1, cb.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace zsd
