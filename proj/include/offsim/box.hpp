#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "offsim/common.hpp"

namespace offsim {

/// Axis-aligned pixel-space bounding box with its class label.
/// Invariants: x_min < x_max, y_min < y_max, all coordinates finite and >= 0.
struct BoundingBox {
    int class_id = 0;
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }

    bool valid() const {
        return class_id >= 0 && std::isfinite(x_min) && std::isfinite(y_min) &&
               std::isfinite(x_max) && std::isfinite(y_max) && x_min >= 0.0 &&
               y_min >= 0.0 && x_min < x_max && y_min < y_max;
    }
};

inline void require_valid(const BoundingBox& b, const char* what) {
    if (!b.valid()) {
        throw input_error(std::string(what) + ": invalid bounding box [" +
                          std::to_string(b.x_min) + "," + std::to_string(b.y_min) + "," +
                          std::to_string(b.x_max) + "," + std::to_string(b.y_max) +
                          "] class " + std::to_string(b.class_id));
    }
}

/// Intersection-over-union of two boxes. Disjoint or degenerate boxes give 0;
/// the union area can never be zero for valid boxes, so no division hazard.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

/// A predicted box with its confidence score in [0,1].
struct Detection {
    BoundingBox box;
    double confidence = 0.0;

    bool valid() const { return box.valid() && confidence >= 0.0 && confidence <= 1.0; }
};

/// An annotated box belonging to one frame.
struct GroundTruthBox {
    BoundingBox box;
    std::string frame_id;
};

}  // namespace offsim
