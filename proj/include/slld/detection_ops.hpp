#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slld/errors.hpp"
#include "slld/geometry.hpp"

namespace slld {

/// Box-regression parameterization between an anchor and a target box:
/// center offsets normalized by anchor size, log-space size ratios.
struct BoxDelta {
    double dx = 0.0;
    double dy = 0.0;
    double dw = 0.0;
    double dh = 0.0;

    bool operator==(const BoxDelta&) const = default;
};

/// Guard against exp() overflow when decoding unconstrained regression
/// outputs; the conventional two-stage detector constant.
inline double default_delta_clamp() { return std::log(1000.0 / 16.0); }

inline BoxDelta encode(const BBox& box, const BBox& anchor) {
    BoxDelta d;
    d.dx = (box.cx() - anchor.cx()) / anchor.w;
    d.dy = (box.cy() - anchor.cy()) / anchor.h;
    d.dw = std::log(box.w / anchor.w);
    d.dh = std::log(box.h / anchor.h);
    return d;
}

/// Inverse of encode. With clip_to = (img_w, img_h) the result is
/// intersected with the image rectangle; a zero-area result after clipping
/// is an error. dw/dh are clamped before exponentiation.
inline BBox decode(const BoxDelta& delta, const BBox& anchor,
                   std::optional<std::pair<double, double>> clip_to = std::nullopt,
                   double size_clamp = default_delta_clamp()) {
    double dw = std::min(delta.dw, size_clamp);
    double dh = std::min(delta.dh, size_clamp);
    double cx = anchor.cx() + delta.dx * anchor.w;
    double cy = anchor.cy() + delta.dy * anchor.h;
    double w = anchor.w * std::exp(dw);
    double h = anchor.h * std::exp(dh);
    BBox out = BBox::from_center(cx, cy, w, h);
    if (clip_to) {
        out = out.clamped(clip_to->first, clip_to->second);
        if (out.area() <= 0.0)
            throw DegenerateBoxError("decode: box degenerate after clipping to image");
    }
    return out;
}

/// A scored, labeled prediction as produced by an external detector.
struct Detection {
    std::int64_t image_id = 0;
    int label_id = 0;
    BBox box;
    double score = 0.0;

    bool operator==(const Detection&) const = default;
};

/// Detections grouped by image, with a provenance tag naming the detector.
struct DetectionSet {
    std::string detector;
    std::map<std::int64_t, std::vector<Detection>> by_image;

    void add(const Detection& d) { by_image[d.image_id].push_back(d); }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [id, v] : by_image) n += v.size();
        return n;
    }
};

/// Greedy class-wise NMS. All inputs must share one (image, label) pair.
/// Sort is stable (score ties keep input order), suppression is strict
/// (IoU > thresh), output is in descending-score order.
inline std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh) {
    if (dets.empty()) return {};
    for (const auto& d : dets)
        if (d.image_id != dets.front().image_id || d.label_id != dets.front().label_id)
            throw InvalidArgumentError("nms: detections must share one image and label");

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score > dets[b].score;
    });

    std::vector<Detection> kept;
    for (std::size_t i : order) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (iou(dets[i].box, k.box) > iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(dets[i]);
    }
    return kept;
}

/// Drops detections scoring below `score_thresh`, then keeps at most
/// `max_per_image` highest-scoring per image across all classes.
inline DetectionSet filter_detections(const DetectionSet& ds, double score_thresh,
                                      std::size_t max_per_image) {
    DetectionSet out;
    out.detector = ds.detector;
    for (const auto& [image_id, dets] : ds.by_image) {
        std::vector<Detection> keep;
        for (const auto& d : dets)
            if (d.score >= score_thresh) keep.push_back(d);
        std::stable_sort(keep.begin(), keep.end(),
                         [](const Detection& a, const Detection& b) {
                             return a.score > b.score;
                         });
        if (keep.size() > max_per_image) keep.resize(max_per_image);
        if (!keep.empty()) out.by_image.emplace(image_id, std::move(keep));
    }
    return out;
}

} // namespace slld
