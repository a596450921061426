#pragma once

#include <optional>

namespace zsd {

// Axis-aligned box in absolute pixels, COCO xywh, origin at the image's
// top-left corner. Area is w*h; there is no "+1" pixel convention.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Corner form, only used transiently inside geometry code.
struct CornerBox {
  double x1, y1, x2, y2;
};

CornerBox to_corners(const BoundingBox& b);
BoundingBox from_corners(const CornerBox& c);

enum class BoxError { NonPositiveExtent, NonFiniteField };

struct ValidationResult {
  std::optional<BoxError> error;
  bool out_of_bounds = false;  // warning only

  bool accepted() const { return !error.has_value(); }
};

ValidationResult validate_box(const BoundingBox& b, double image_w, double image_h);

// Intersection with the image rectangle [0,w]x[0,h]. The result may have
// zero extent when the box lies fully outside the image.
BoundingBox clip_box(const BoundingBox& b, double image_w, double image_h);

// Intersection over union for validated boxes. Disjoint and edge-touching
// boxes give exactly 0; identical boxes give exactly 1.
double iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace zsd
