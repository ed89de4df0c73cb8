#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "offsim/box.hpp"
#include "offsim/common.hpp"

namespace offsim {

/// Pinhole camera used to project metric boxes into pixel space.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    double image_width = 0.0;
    double image_height = 0.0;

    bool valid() const {
        return fx > 0.0 && fy > 0.0 && image_width > 0.0 && image_height > 0.0 &&
               cx > 0.0 && cx < image_width && cy > 0.0 && cy < image_height;
    }
};

/// A 3D box as its eight corner points in camera-frame meters (Z forward).
struct Box3D {
    std::array<std::array<double, 3>, 8> corners{};
    int class_id = 0;
};

// Corners closer than this to the image plane are culled before projection.
inline constexpr double kNearPlaneMeters = 0.01;
// Projected boxes thinner than this in either dimension are discarded.
inline constexpr double kMinProjectedPixels = 1.0;

/// Projects a 3D box to the axis-aligned hull of its visible corners,
/// clipped to the image. Returns nothing when every corner lies behind the
/// near plane or the clipped hull is degenerate.
inline std::optional<BoundingBox> project_box3d(const Box3D& box, const CameraIntrinsics& cam) {
    if (!cam.valid()) throw input_error("project_box3d: invalid camera intrinsics");

    double x_min = std::numeric_limits<double>::infinity();
    double y_min = std::numeric_limits<double>::infinity();
    double x_max = -std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    bool any_visible = false;
    for (const auto& c : box.corners) {
        const double z = c[2];
        if (!(z > kNearPlaneMeters)) continue;
        any_visible = true;
        const double u = cam.fx * c[0] / z + cam.cx;
        const double v = cam.fy * c[1] / z + cam.cy;
        x_min = std::min(x_min, u);
        y_min = std::min(y_min, v);
        x_max = std::max(x_max, u);
        y_max = std::max(y_max, v);
    }
    if (!any_visible) return std::nullopt;

    x_min = std::max(x_min, 0.0);
    y_min = std::max(y_min, 0.0);
    x_max = std::min(x_max, cam.image_width);
    y_max = std::min(y_max, cam.image_height);
    if (x_max - x_min < kMinProjectedPixels || y_max - y_min < kMinProjectedPixels) {
        return std::nullopt;
    }

    BoundingBox out;
    out.class_id = box.class_id;
    out.x_min = x_min;
    out.y_min = y_min;
    out.x_max = x_max;
    out.y_max = y_max;
    return out;
}

/// Parses normalized label lines ("class x_center y_center width height",
/// all in [0,1]) into pixel boxes for the given image size. Malformed or
/// out-of-range lines are rejected with their line number.
inline std::vector<GroundTruthBox> parse_labels(std::istream& in, double image_width,
                                                double image_height,
                                                const std::string& frame_id = "") {
    if (!(image_width > 0.0 && image_height > 0.0)) {
        throw input_error("parse_labels: image size must be positive");
    }
    std::vector<GroundTruthBox> boxes;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream fields(line);
        long long class_id = 0;
        double xc = 0.0, yc = 0.0, w = 0.0, h = 0.0;
        if (!(fields >> class_id)) {
            if (fields.eof()) continue;  // blank line
            throw input_error("label line " + std::to_string(line_number) + ": malformed class id");
        }
        if (!(fields >> xc >> yc >> w >> h)) {
            throw input_error("label line " + std::to_string(line_number) + ": expected 5 fields");
        }
        std::string extra;
        if (fields >> extra) {
            throw input_error("label line " + std::to_string(line_number) + ": trailing garbage '" + extra + "'");
        }
        if (class_id < 0) {
            throw input_error("label line " + std::to_string(line_number) + ": negative class id");
        }
        auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0 && std::isfinite(v); };
        if (!in_unit(xc) || !in_unit(yc) || !in_unit(w) || !in_unit(h)) {
            throw input_error("label line " + std::to_string(line_number) +
                              ": normalized value outside [0,1]");
        }
        if (w <= 0.0 || h <= 0.0) {
            throw input_error("label line " + std::to_string(line_number) + ": empty box");
        }

        GroundTruthBox gt;
        gt.frame_id = frame_id;
        gt.box.class_id = static_cast<int>(class_id);
        // Clamp to the image so rounded centers near the border stay valid.
        gt.box.x_min = std::max(0.0, (xc - w / 2.0) * image_width);
        gt.box.y_min = std::max(0.0, (yc - h / 2.0) * image_height);
        gt.box.x_max = std::min(image_width, (xc + w / 2.0) * image_width);
        gt.box.y_max = std::min(image_height, (yc + h / 2.0) * image_height);
        if (!gt.box.valid()) {
            throw input_error("label line " + std::to_string(line_number) + ": degenerate box");
        }
        boxes.push_back(std::move(gt));
    }
    return boxes;
}

/// Writes boxes back to the normalized label format at 6 decimals.
inline void serialize_labels(const std::vector<GroundTruthBox>& boxes, double image_width,
                             double image_height, std::ostream& out) {
    for (const auto& gt : boxes) {
        const double xc = (gt.box.x_min + gt.box.x_max) / 2.0 / image_width;
        const double yc = (gt.box.y_min + gt.box.y_max) / 2.0 / image_height;
        const double w = gt.box.width() / image_width;
        const double h = gt.box.height() / image_height;
        out << gt.box.class_id << ' ' << detail::format("%.6f %.6f %.6f %.6f", xc, yc, w, h)
            << '\n';
    }
}

struct FrameRecord {
    std::string frame_id;
    std::vector<GroundTruthBox> boxes;
};

/// One dataset split (train/validation/test) with its annotated frames.
struct DatasetSplit {
    std::string name;
    std::vector<FrameRecord> frames;
};

inline void require_unique_frames(const DatasetSplit& split) {
    std::set<std::string> seen;
    for (const auto& f : split.frames) {
        if (!seen.insert(f.frame_id).second) {
            throw input_error("split '" + split.name + "': duplicate frame id '" + f.frame_id + "'");
        }
    }
}

/// Instance counts per class for each split plus a totals row.
struct ClassStats {
    std::vector<std::string> split_names;
    std::vector<int> class_ids;                       // sorted
    std::map<std::string, std::map<int, long long>> counts;  // split -> class -> count
    std::map<int, long long> totals;
};

inline ClassStats class_stats(const std::vector<DatasetSplit>& splits) {
    ClassStats stats;
    std::set<int> classes;
    for (const auto& split : splits) {
        require_unique_frames(split);
        stats.split_names.push_back(split.name);
        auto& row = stats.counts[split.name];
        for (const auto& frame : split.frames) {
            for (const auto& gt : frame.boxes) {
                row[gt.box.class_id]++;
                classes.insert(gt.box.class_id);
            }
        }
    }
    stats.class_ids.assign(classes.begin(), classes.end());
    for (int cls : stats.class_ids) {
        long long total = 0;
        for (const auto& split : splits) {
            auto& row = stats.counts[split.name];
            total += row[cls];  // creates missing entries as 0
        }
        stats.totals[cls] = total;
    }
    return stats;
}

}  // namespace offsim
