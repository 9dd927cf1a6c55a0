#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "slld/errors.hpp"

namespace slld {

/// Axis-aligned box in pixel coordinates, origin top-left.
/// Stored as (x, y, w, h) to match COCO annotation JSON; corner accessors
/// derive (x1, y1, x2, y2) on demand.
struct BBox {
    double x = 0.0; ///< left edge
    double y = 0.0; ///< top edge
    double w = 0.0; ///< width, > 0 for admitted boxes
    double h = 0.0; ///< height, > 0 for admitted boxes

    BBox() = default;
    BBox(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {}

    double x2() const { return x + w; }
    double y2() const { return y + h; }
    double cx() const { return x + w / 2.0; }
    double cy() const { return y + h / 2.0; }
    double area() const { return w * h; }
    double aspect_ratio() const { return w / h; }

    bool valid() const {
        return std::isfinite(x) && std::isfinite(y) && w > 0.0 && h > 0.0;
    }

    static BBox from_corners(double x1, double y1, double x2, double y2) {
        return BBox(x1, y1, x2 - x1, y2 - y1);
    }

    static BBox from_center(double cx, double cy, double w, double h) {
        return BBox(cx - w / 2.0, cy - h / 2.0, w, h);
    }

    /// Intersects with [0, img_w] x [0, img_h]. May produce a degenerate box;
    /// callers decide whether that is an error.
    BBox clamped(double img_w, double img_h) const {
        double nx1 = std::clamp(x, 0.0, img_w);
        double ny1 = std::clamp(y, 0.0, img_h);
        double nx2 = std::clamp(x2(), 0.0, img_w);
        double ny2 = std::clamp(y2(), 0.0, img_h);
        return from_corners(nx1, ny1, nx2, ny2);
    }

    bool operator==(const BBox&) const = default;
};

/// Intersection over union of two boxes, in [0, 1]. Continuous geometry,
/// no pixel-inclusive "+1" convention.
inline double iou(const BBox& a, const BBox& b) {
    double ix1 = std::max(a.x, b.x);
    double iy1 = std::max(a.y, b.y);
    double ix2 = std::min(a.x2(), b.x2());
    double iy2 = std::min(a.y2(), b.y2());
    double iw = ix2 - ix1;
    double ih = iy2 - iy1;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    double inter = iw * ih;
    double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// |as| x |bs| matrix of IoU values; result[i][j] == iou(as[i], bs[j]).
inline std::vector<std::vector<double>> pairwise_iou(const std::vector<BBox>& as,
                                                     const std::vector<BBox>& bs) {
    if (as.empty() || bs.empty())
        throw InvalidArgumentError("pairwise_iou: empty input list");
    std::vector<std::vector<double>> m(as.size(), std::vector<double>(bs.size()));
    for (std::size_t i = 0; i < as.size(); ++i)
        for (std::size_t j = 0; j < bs.size(); ++j)
            m[i][j] = iou(as[i], bs[j]);
    return m;
}

/// Named area bucket [lo, hi) in square pixels. The three named buckets
/// (small/medium/large) partition (0, inf); "all" spans everything.
struct AreaRange {
    std::string label;
    double lo = 0.0;                                    ///< inclusive
    double hi = std::numeric_limits<double>::infinity(); ///< exclusive

    bool contains(double area) const { return area >= lo && area < hi; }
};

/// COCO-standard buckets: small (0, 32^2), medium [32^2, 96^2), large [96^2, inf).
inline std::vector<AreaRange> coco_area_buckets() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {{"small", 0.0, 32.0 * 32.0},
            {"medium", 32.0 * 32.0, 96.0 * 96.0},
            {"large", 96.0 * 96.0, inf}};
}

/// The bucket list the evaluator iterates: "all" first, then the partition.
inline std::vector<AreaRange> coco_eval_area_ranges() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<AreaRange> out{{"all", 0.0, inf}};
    for (auto& r : coco_area_buckets()) out.push_back(r);
    return out;
}

/// Label of the unique bucket containing area(b).
inline std::string area_bucket(const BBox& b, const std::vector<AreaRange>& ranges) {
    double a = b.area();
    for (const auto& r : ranges)
        if (r.contains(a)) return r.label;
    throw InvalidArgumentError("area_bucket: ranges do not cover area " + std::to_string(a));
}

} // namespace slld
