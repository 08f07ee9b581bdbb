#pragma once

#include <algorithm>

namespace quickseg {

/// Axis-aligned box in pixel-edge convention: a pixel (x, y) covers [x, x+1) x [y, y+1).
struct BoundingBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    static BoundingBox from_xywh(double x, double y, double w, double h) {
        return {x, y, x + w, y + h};
    }

    double width() const { return std::max(0.0, x2 - x1); }
    double height() const { return std::max(0.0, y2 - y1); }
    double area() const { return width() * height(); }
    bool empty() const { return area() <= 0.0; }
    bool valid() const { return x1 <= x2 && y1 <= y2; }

    bool contains(double x, double y) const { return x >= x1 && x < x2 && y >= y1 && y < y2; }

    BoundingBox clamped(double width_limit, double height_limit) const {
        return {std::clamp(x1, 0.0, width_limit), std::clamp(y1, 0.0, height_limit),
                std::clamp(x2, 0.0, width_limit), std::clamp(y2, 0.0, height_limit)};
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

double intersection_area(const BoundingBox& a, const BoundingBox& b);

/// |a ∩ b| / |a ∪ b|, or 0 when the union is empty.
double box_iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace quickseg
