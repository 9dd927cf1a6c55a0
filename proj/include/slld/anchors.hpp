#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slld/dataset.hpp"
#include "slld/errors.hpp"
#include "slld/geometry.hpp"

namespace slld {

/// Dense-grid anchor layout: pixel scales, aspect ratios, grid stride, and
/// the image extent the grid tiles.
struct AnchorConfig {
    std::vector<double> scales{32.0, 64.0, 128.0, 256.0, 512.0};
    std::vector<double> aspect_ratios;
    double stride = 16.0;
    double image_w = 612.0;
    double image_h = 729.0;

    void validate() const {
        if (scales.empty() || aspect_ratios.empty())
            throw InvalidArgumentError("anchor config: scales and ratios must be non-empty");
        if (stride <= 0.0)
            throw InvalidArgumentError("anchor config: stride must be positive");
        for (std::size_t i = 0; i < scales.size(); ++i) {
            if (scales[i] <= 0.0)
                throw InvalidArgumentError("anchor config: scales must be positive");
            if (i > 0 && scales[i] <= scales[i - 1])
                throw InvalidArgumentError("anchor config: scales must be strictly increasing");
        }
        for (double r : aspect_ratios)
            if (r <= 0.0)
                throw InvalidArgumentError("anchor config: ratios must be positive");
        if (image_w < stride || image_h < stride)
            throw InvalidArgumentError("anchor config: grid needs at least one point");
    }
};

/// Eight evenly spaced ratios over [0.2, 2.8]; stand-in until a fitted
/// clustering supplies data-driven values.
inline AnchorConfig default_anchor_config() {
    AnchorConfig cfg;
    for (int i = 0; i < 8; ++i)
        cfg.aspect_ratios.push_back(0.2 + (2.8 - 0.2) * i / 7.0);
    return cfg;
}

/// The conventional three-ratio configuration used as the comparison baseline.
inline AnchorConfig baseline_anchor_config() {
    AnchorConfig cfg;
    cfg.aspect_ratios = {0.5, 1.0, 2.0};
    return cfg;
}

inline nlohmann::json anchor_config_to_json(const AnchorConfig& cfg) {
    return {{"scales", cfg.scales},
            {"aspect_ratios", cfg.aspect_ratios},
            {"stride", cfg.stride},
            {"image_w", cfg.image_w},
            {"image_h", cfg.image_h}};
}

inline AnchorConfig anchor_config_from_json(const nlohmann::json& j) {
    AnchorConfig cfg;
    try {
        cfg.scales = j.at("scales").get<std::vector<double>>();
        cfg.aspect_ratios = j.at("aspect_ratios").get<std::vector<double>>();
        cfg.stride = j.at("stride").get<double>();
        cfg.image_w = j.at("image_w").get<double>();
        cfg.image_h = j.at("image_h").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("anchor config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

/// One generated anchor with its provenance in the (grid, scale, ratio) lattice.
struct Anchor {
    BBox box;
    int scale_index = 0;
    int ratio_index = 0;
    int grid_x = 0;
    int grid_y = 0;
    bool out_of_bounds = false; ///< extends beyond the image rectangle (not clipped)
};

struct AnchorSet {
    AnchorConfig config;
    int grid_w = 0;
    int grid_h = 0;
    std::vector<Anchor> anchors;

    std::vector<BBox> boxes() const {
        std::vector<BBox> out;
        out.reserve(anchors.size());
        for (const auto& a : anchors) out.push_back(a.box);
        return out;
    }
};

/// Tiles one anchor per (scale, ratio) at every grid center (gx + 1/2,
/// gy + 1/2) * stride. An anchor at scale s and ratio r has w = s*sqrt(r),
/// h = s/sqrt(r), so area == s^2 and w/h == r. Anchors are never clipped;
/// ones leaving the image are only flagged.
inline AnchorSet generate_anchors(const AnchorConfig& cfg) {
    cfg.validate();
    AnchorSet set;
    set.config = cfg;
    set.grid_w = static_cast<int>(cfg.image_w / cfg.stride);
    set.grid_h = static_cast<int>(cfg.image_h / cfg.stride);
    set.anchors.reserve(static_cast<std::size_t>(set.grid_w) * set.grid_h *
                        cfg.scales.size() * cfg.aspect_ratios.size());
    for (int gy = 0; gy < set.grid_h; ++gy) {
        for (int gx = 0; gx < set.grid_w; ++gx) {
            double cx = (gx + 0.5) * cfg.stride;
            double cy = (gy + 0.5) * cfg.stride;
            for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
                for (std::size_t ri = 0; ri < cfg.aspect_ratios.size(); ++ri) {
                    double s = cfg.scales[si];
                    double r = cfg.aspect_ratios[ri];
                    double w = s * std::sqrt(r);
                    double h = s / std::sqrt(r);
                    Anchor a;
                    a.box = BBox::from_center(cx, cy, w, h);
                    a.scale_index = static_cast<int>(si);
                    a.ratio_index = static_cast<int>(ri);
                    a.grid_x = gx;
                    a.grid_y = gy;
                    a.out_of_bounds = a.box.x < 0.0 || a.box.y < 0.0 ||
                                      a.box.x2() > cfg.image_w || a.box.y2() > cfg.image_h;
                    set.anchors.push_back(a);
                }
            }
        }
    }
    return set;
}

/// Anchor labels from IoU matching against one image's ground truth.
struct MatchResult {
    static constexpr int kNegative = -1;
    static constexpr int kIgnore = -2;

    /// Per anchor: gt index if positive, kNegative, or kIgnore.
    std::vector<int> anchor_to_gt;
    /// Per gt: argmax-IoU anchor index, or -1 when no anchor overlaps it.
    std::vector<int> best_anchor;
    /// Per gt: the argmax IoU value.
    std::vector<double> best_iou;
};

/// RPN-style label assignment: an anchor is positive when its IoU with some
/// gt reaches pos_thresh, or when it is the argmax anchor for a gt (rescue,
/// applied only when that argmax IoU is positive); negative when its best
/// IoU is below neg_thresh; ignored in between.
inline MatchResult match_anchors(const AnchorSet& anchors, const std::vector<BBox>& gts,
                                 double pos_thresh = 0.7, double neg_thresh = 0.3) {
    if (pos_thresh < neg_thresh)
        throw InvalidArgumentError("match_anchors: pos_thresh must be >= neg_thresh");

    MatchResult res;
    res.anchor_to_gt.assign(anchors.anchors.size(), MatchResult::kNegative);
    res.best_anchor.assign(gts.size(), -1);
    res.best_iou.assign(gts.size(), 0.0);

    for (std::size_t ai = 0; ai < anchors.anchors.size(); ++ai) {
        const BBox& abox = anchors.anchors[ai].box;
        double best = 0.0;
        int best_gt = -1;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            double v = iou(abox, gts[gi]);
            if (v > best) {
                best = v;
                best_gt = static_cast<int>(gi);
            }
            if (v > res.best_iou[gi]) {
                res.best_iou[gi] = v;
                res.best_anchor[gi] = static_cast<int>(ai);
            }
        }
        if (best >= pos_thresh && best_gt >= 0)
            res.anchor_to_gt[ai] = best_gt;
        else if (best < neg_thresh)
            res.anchor_to_gt[ai] = MatchResult::kNegative;
        else
            res.anchor_to_gt[ai] = MatchResult::kIgnore;
    }

    // Argmax rescue: every gt with any overlap keeps its best anchor positive.
    for (std::size_t gi = 0; gi < gts.size(); ++gi)
        if (res.best_anchor[gi] >= 0 && res.best_iou[gi] > 0.0)
            res.anchor_to_gt[static_cast<std::size_t>(res.best_anchor[gi])] =
                static_cast<int>(gi);

    return res;
}

inline MatchResult match_anchors(const AnchorSet& anchors,
                                 const std::vector<GroundTruthInstance>& gts,
                                 double pos_thresh = 0.7, double neg_thresh = 0.3) {
    std::vector<BBox> boxes;
    boxes.reserve(gts.size());
    for (const auto& g : gts) boxes.push_back(g.box);
    return match_anchors(anchors, boxes, pos_thresh, neg_thresh);
}

/// Per-label fraction of gt instances whose best-anchor IoU clears the
/// threshold. Labels without instances report no value rather than zero.
struct RecallTable {
    struct Row {
        std::string label;
        std::size_t instances = 0;
        std::size_t covered = 0;
        std::optional<double> recall;
    };
    std::vector<Row> rows;
    std::size_t total_instances = 0;
    std::size_t total_covered = 0;
    std::optional<double> overall;
};

/// Coverage analysis of an anchor layout over a dataset: for every gt
/// instance, the max IoU against the full anchor set, bucketed per label.
inline RecallTable anchor_recall(const LayoutDataset& ds, const AnchorConfig& cfg,
                                 double iou_thresh) {
    AnchorSet anchors = generate_anchors(cfg);

    std::vector<std::size_t> instances(ds.schema.size(), 0);
    std::vector<std::size_t> covered(ds.schema.size(), 0);
    for (const auto& inst : ds.instances) {
        double best = 0.0;
        for (const auto& a : anchors.anchors) {
            best = std::max(best, iou(a.box, inst.box));
            if (best >= 1.0) break;
        }
        auto li = static_cast<std::size_t>(inst.label_id) - 1;
        ++instances[li];
        if (best >= iou_thresh) ++covered[li];
    }

    RecallTable table;
    for (std::size_t i = 0; i < ds.schema.size(); ++i) {
        RecallTable::Row row;
        row.label = ds.schema.labels[i].name;
        row.instances = instances[i];
        row.covered = covered[i];
        if (instances[i] > 0)
            row.recall = static_cast<double>(covered[i]) / static_cast<double>(instances[i]);
        table.total_instances += instances[i];
        table.total_covered += covered[i];
        table.rows.push_back(std::move(row));
    }
    if (table.total_instances > 0)
        table.overall = static_cast<double>(table.total_covered) /
                        static_cast<double>(table.total_instances);
    return table;
}

} // namespace slld
