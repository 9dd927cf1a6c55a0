#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "slld/dataset.hpp"
#include "slld/detection_ops.hpp"
#include "slld/errors.hpp"
#include "slld/geometry.hpp"

namespace slld {

/// 101 recall sample points 0.00, 0.01, ..., 1.00.
inline std::vector<double> default_recall_points() {
    std::vector<double> pts;
    pts.reserve(101);
    for (int i = 0; i <= 100; ++i) pts.push_back(i / 100.0);
    return pts;
}

/// 10 IoU thresholds 0.50, 0.55, ..., 0.95.
inline std::vector<double> default_iou_thresholds() {
    std::vector<double> t;
    t.reserve(10);
    for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
    return t;
}

struct EvalConfig {
    std::vector<double> iou_thresholds = default_iou_thresholds();
    std::vector<double> recall_points = default_recall_points();
    std::vector<AreaRange> area_ranges = coco_eval_area_ranges();
    std::size_t max_detections = 100;

    void validate() const {
        if (iou_thresholds.empty())
            throw InvalidArgumentError("eval config: no IoU thresholds");
        for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
            if (!(iou_thresholds[i] > 0.0 && iou_thresholds[i] <= 1.0))
                throw InvalidArgumentError("eval config: IoU thresholds must lie in (0, 1]");
            if (i > 0 && iou_thresholds[i] <= iou_thresholds[i - 1])
                throw InvalidArgumentError("eval config: IoU thresholds must be increasing");
        }
        if (recall_points.size() < 2 || recall_points.front() != 0.0 ||
            recall_points.back() != 1.0)
            throw InvalidArgumentError("eval config: recall points must span [0, 1]");
        for (std::size_t i = 1; i < recall_points.size(); ++i)
            if (recall_points[i] <= recall_points[i - 1])
                throw InvalidArgumentError("eval config: recall points must be increasing");
        if (area_ranges.empty() || area_ranges.front().label != "all")
            throw InvalidArgumentError("eval config: first area range must be \"all\"");
        if (max_detections == 0)
            throw InvalidArgumentError("eval config: max_detections must be positive");
    }
};

/// Matching outcome for one (image, class) slice at one IoU threshold,
/// indexed by the caller's input order.
struct EvalMatch {
    std::vector<int> det_to_gt;     ///< gt index or -1
    std::vector<bool> det_tp;       ///< matched a counted gt
    std::vector<bool> det_fp;       ///< unmatched (and not ignored)
    std::vector<bool> det_ignored;  ///< matched an ignored gt
    std::vector<bool> gt_matched;
};

namespace detail {

/// Core greedy matcher. Detections must arrive sorted by descending score;
/// gts carry precomputed ignore flags (crowd or out-of-area). Matching
/// prefers counted gts: once a detection holds a counted match, ignored gts
/// cannot take over even with higher IoU. Crowd gts absorb any number of
/// detections; each such detection is marked ignored rather than TP.
struct SliceMatch {
    std::vector<int> det_to_gt;
    std::vector<bool> det_ignored;
    std::vector<bool> gt_matched;
};

inline SliceMatch match_sorted(const std::vector<BBox>& gt_boxes,
                               const std::vector<bool>& gt_crowd,
                               const std::vector<bool>& gt_ignore,
                               const std::vector<BBox>& det_boxes_sorted,
                               double iou_thresh) {
    SliceMatch m;
    m.det_to_gt.assign(det_boxes_sorted.size(), -1);
    m.det_ignored.assign(det_boxes_sorted.size(), false);
    m.gt_matched.assign(gt_boxes.size(), false);

    // Counted gts first, stable within each group.
    std::vector<std::size_t> gt_order(gt_boxes.size());
    std::iota(gt_order.begin(), gt_order.end(), 0);
    std::stable_sort(gt_order.begin(), gt_order.end(), [&](std::size_t a, std::size_t b) {
        return static_cast<int>(gt_ignore[a]) < static_cast<int>(gt_ignore[b]);
    });

    const double floor = std::min(iou_thresh, 1.0 - 1e-10);
    for (std::size_t d = 0; d < det_boxes_sorted.size(); ++d) {
        double best = floor;
        int match = -1;
        for (std::size_t g : gt_order) {
            if (m.gt_matched[g] && !gt_crowd[g]) continue;
            if (match >= 0 && !gt_ignore[static_cast<std::size_t>(match)] && gt_ignore[g])
                break;
            double v = iou(det_boxes_sorted[d], gt_boxes[g]);
            if (v < best) continue;
            best = v;
            match = static_cast<int>(g);
        }
        if (match >= 0) {
            m.det_to_gt[d] = match;
            m.det_ignored[d] = gt_ignore[static_cast<std::size_t>(match)];
            m.gt_matched[static_cast<std::size_t>(match)] = true;
        }
    }
    return m;
}

} // namespace detail

/// Greedy score-ordered matching for one (image, class) pair: each detection
/// takes the unmatched gt with the highest IoU at or above the threshold,
/// crowd gts absorbing extra detections as ignored. Results are reported in
/// the input detection order.
inline EvalMatch match_for_eval(const std::vector<GroundTruthInstance>& gts,
                                const std::vector<Detection>& dets,
                                double iou_thresh) {
    std::vector<BBox> gt_boxes;
    std::vector<bool> gt_crowd;
    for (const auto& g : gts) {
        gt_boxes.push_back(g.box);
        gt_crowd.push_back(g.iscrowd);
    }
    std::vector<bool> gt_ignore = gt_crowd;

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score > dets[b].score;
    });
    std::vector<BBox> sorted_boxes;
    sorted_boxes.reserve(dets.size());
    for (std::size_t i : order) sorted_boxes.push_back(dets[i].box);

    auto m = detail::match_sorted(gt_boxes, gt_crowd, gt_ignore, sorted_boxes, iou_thresh);

    EvalMatch out;
    out.det_to_gt.assign(dets.size(), -1);
    out.det_tp.assign(dets.size(), false);
    out.det_fp.assign(dets.size(), false);
    out.det_ignored.assign(dets.size(), false);
    out.gt_matched = m.gt_matched;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        std::size_t i = order[pos];
        out.det_to_gt[i] = m.det_to_gt[pos];
        out.det_ignored[i] = m.det_ignored[pos];
        out.det_tp[i] = m.det_to_gt[pos] >= 0 && !m.det_ignored[pos];
        out.det_fp[i] = m.det_to_gt[pos] < 0;
    }
    return out;
}

/// Precision-recall accumulation for one (class, IoU threshold, area range)
/// slice of the dataset.
struct PRCurve {
    int label_id = 0;
    double iou_threshold = 0.0;
    std::string area_label;

    /// One globally score-sorted detection; tp == fp == false means ignored.
    struct DetPoint {
        double score = 0.0;
        bool tp = false;
        bool fp = false;
    };
    std::vector<DetPoint> detections;
    std::size_t num_gt = 0; ///< counted (non-ignored) gts in the slice

    std::vector<double> interp_precision; ///< at each recall point; empty when num_gt == 0
    double max_recall = 0.0;
};

/// Fills interp_precision and max_recall from the raw detection list:
/// cumulative precision/recall walk, precision made non-increasing in
/// recall, sampled at each recall point (0 past the curve's end).
inline void interpolate_curve(PRCurve& curve, const std::vector<double>& recall_points) {
    curve.interp_precision.clear();
    curve.max_recall = 0.0;
    if (curve.num_gt == 0) return;

    std::vector<double> precision, recall;
    precision.reserve(curve.detections.size());
    recall.reserve(curve.detections.size());
    std::size_t tp = 0, fp = 0;
    for (const auto& d : curve.detections) {
        if (d.tp) ++tp;
        if (d.fp) ++fp;
        recall.push_back(static_cast<double>(tp) / static_cast<double>(curve.num_gt));
        precision.push_back(tp + fp > 0
                                ? static_cast<double>(tp) / static_cast<double>(tp + fp)
                                : 0.0);
    }
    curve.max_recall = recall.empty() ? 0.0 : recall.back();

    for (std::size_t i = precision.size(); i > 1; --i)
        precision[i - 2] = std::max(precision[i - 2], precision[i - 1]);

    curve.interp_precision.reserve(recall_points.size());
    for (double r : recall_points) {
        auto it = std::lower_bound(recall.begin(), recall.end(), r);
        curve.interp_precision.push_back(
            it == recall.end() ? 0.0
                               : precision[static_cast<std::size_t>(it - recall.begin())]);
    }
}

/// 101-point interpolated AP of a filled curve; no-GT slices have no value.
inline std::optional<double> average_precision(const PRCurve& curve) {
    if (curve.num_gt == 0) return std::nullopt;
    if (curve.interp_precision.empty()) return 0.0;
    double sum = std::accumulate(curve.interp_precision.begin(),
                                 curve.interp_precision.end(), 0.0);
    return sum / static_cast<double>(curve.interp_precision.size());
}

/// Headline metrics (as percentages) plus per-class breakdown.
struct EvalReport {
    std::string detector;
    std::string backbone = "-";
    std::string dataset_name;

    std::optional<double> map;       ///< mean over classes x thresholds, area "all"
    std::optional<double> ap50;
    std::optional<double> ap75;
    std::optional<double> ap_small;
    std::optional<double> ap_medium;
    std::optional<double> ap_large;
    std::optional<double> ar;        ///< mean max-recall at max_detections

    struct PerClass {
        std::string label;
        std::optional<double> ap50;
        std::optional<double> ap;
        std::optional<double> ar;
    };
    std::vector<PerClass> per_class;

    std::size_t num_gt = 0;
    std::size_t num_detections = 0;
    EvalConfig config;
};

/// Full COCO-style evaluation of a detection set against the dataset's test
/// split (or all images when no split is assigned). Produces every headline
/// metric and the per-class table; the raw curves are returned alongside for
/// inspection.
struct EvalResult {
    EvalReport report;
    std::vector<PRCurve> curves; ///< every (class, threshold, area) slice
};

inline EvalResult evaluate_full(const LayoutDataset& ds, const DetectionSet& dets,
                                const EvalConfig& cfg = EvalConfig{}) {
    cfg.validate();

    // Evaluation image set: the test split when assignments exist, else all.
    std::vector<std::int64_t> eval_images;
    if (!ds.split_assignments.empty()) {
        eval_images = ds.image_ids_in_split(Split::test);
    } else {
        for (const auto& im : ds.images) eval_images.push_back(im.image_id);
    }
    std::sort(eval_images.begin(), eval_images.end());
    std::set<std::int64_t> eval_set(eval_images.begin(), eval_images.end());

    std::vector<std::string> offenders;
    for (const auto& [image_id, v] : dets.by_image) {
        (void)v;
        if (!eval_set.count(image_id)) offenders.push_back(std::to_string(image_id));
    }
    if (!offenders.empty())
        throw UnknownIdError("evaluate: detections reference images outside the test split",
                             offenders);
    for (const auto& [image_id, v] : dets.by_image)
        for (const auto& d : v)
            if (!ds.schema.contains_id(d.label_id))
                offenders.push_back(std::to_string(d.label_id));
    if (!offenders.empty()) {
        std::sort(offenders.begin(), offenders.end());
        offenders.erase(std::unique(offenders.begin(), offenders.end()), offenders.end());
        throw UnknownIdError("evaluate: detections carry labels outside the schema",
                             offenders);
    }

    // Group ground truth and detections per (image, class), preserving order.
    const std::size_t num_classes = ds.schema.size();
    std::map<std::int64_t, std::vector<std::vector<const GroundTruthInstance*>>> gt_by_image;
    for (auto id : eval_images)
        gt_by_image[id].resize(num_classes);
    for (const auto& inst : ds.instances) {
        auto it = gt_by_image.find(inst.image_id);
        if (it == gt_by_image.end()) continue;
        it->second[static_cast<std::size_t>(inst.label_id) - 1].push_back(&inst);
    }

    std::map<std::int64_t, std::vector<std::vector<const Detection*>>> det_by_image;
    for (auto id : eval_images)
        det_by_image[id].resize(num_classes);
    std::size_t num_dets_used = 0;
    for (const auto& [image_id, v] : dets.by_image) {
        auto& slots = det_by_image.at(image_id);
        for (const auto& d : v)
            slots[static_cast<std::size_t>(d.label_id) - 1].push_back(&d);
        for (auto& slot : slots) {
            std::stable_sort(slot.begin(), slot.end(),
                             [](const Detection* a, const Detection* b) {
                                 return a->score > b->score;
                             });
            if (slot.size() > cfg.max_detections) slot.resize(cfg.max_detections);
            num_dets_used += slot.size();
        }
    }

    std::size_t num_gt_used = 0;
    for (const auto& [id, slots] : gt_by_image)
        for (const auto& slot : slots) num_gt_used += slot.size();

    EvalResult result;
    const std::size_t T = cfg.iou_thresholds.size();
    const std::size_t A = cfg.area_ranges.size();

    // ap[a][t][c], max_recall[a][t][c]; nullopt where the slice has no gt.
    std::vector<std::vector<std::vector<std::optional<double>>>> ap(
        A, std::vector<std::vector<std::optional<double>>>(
               T, std::vector<std::optional<double>>(num_classes)));
    auto recall = ap;

    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t a = 0; a < A; ++a) {
            const AreaRange& range = cfg.area_ranges[a];
            std::vector<PRCurve> curves(T);
            for (std::size_t t = 0; t < T; ++t) {
                curves[t].label_id = static_cast<int>(c) + 1;
                curves[t].iou_threshold = cfg.iou_thresholds[t];
                curves[t].area_label = range.label;
            }

            for (auto image_id : eval_images) {
                const auto& gt_slot = gt_by_image.at(image_id)[c];
                const auto& det_slot = det_by_image.at(image_id)[c];
                if (gt_slot.empty() && det_slot.empty()) continue;

                std::vector<BBox> gt_boxes;
                std::vector<bool> gt_crowd, gt_ignore;
                for (const auto* g : gt_slot) {
                    gt_boxes.push_back(g->box);
                    gt_crowd.push_back(g->iscrowd);
                    gt_ignore.push_back(g->iscrowd || !range.contains(g->box.area()));
                }
                std::size_t counted =
                    static_cast<std::size_t>(std::count(gt_ignore.begin(),
                                                        gt_ignore.end(), false));

                std::vector<BBox> det_boxes;
                for (const auto* d : det_slot) det_boxes.push_back(d->box);

                for (std::size_t t = 0; t < T; ++t) {
                    curves[t].num_gt += counted;
                    auto m = detail::match_sorted(gt_boxes, gt_crowd, gt_ignore, det_boxes,
                                                  cfg.iou_thresholds[t]);
                    for (std::size_t d = 0; d < det_boxes.size(); ++d) {
                        bool ignored = m.det_ignored[d];
                        // Unmatched detections outside the range do not count as FP.
                        if (m.det_to_gt[d] < 0 && !range.contains(det_boxes[d].area()))
                            ignored = true;
                        PRCurve::DetPoint p;
                        p.score = det_slot[d]->score;
                        p.tp = m.det_to_gt[d] >= 0 && !m.det_ignored[d];
                        p.fp = m.det_to_gt[d] < 0 && !ignored;
                        curves[t].detections.push_back(p);
                    }
                }
            }

            for (std::size_t t = 0; t < T; ++t) {
                auto& curve = curves[t];
                std::stable_sort(curve.detections.begin(), curve.detections.end(),
                                 [](const PRCurve::DetPoint& x, const PRCurve::DetPoint& y) {
                                     return x.score > y.score;
                                 });
                interpolate_curve(curve, cfg.recall_points);
                ap[a][t][c] = average_precision(curve);
                if (curve.num_gt > 0) recall[a][t][c] = curve.max_recall;
                result.curves.push_back(std::move(curve));
            }
        }
    }

    // Aggregate: mean over defined (threshold, class) cells of a given area.
    auto mean_over = [&](std::size_t a, std::optional<std::size_t> only_t)
        -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 0; t < T; ++t) {
            if (only_t && t != *only_t) continue;
            for (std::size_t c = 0; c < num_classes; ++c) {
                if (!ap[a][t][c]) continue;
                sum += *ap[a][t][c];
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return 100.0 * sum / static_cast<double>(n);
    };

    auto threshold_index = [&](double value) -> std::optional<std::size_t> {
        for (std::size_t t = 0; t < T; ++t)
            if (std::abs(cfg.iou_thresholds[t] - value) < 1e-9) return t;
        return std::nullopt;
    };

    EvalReport& rep = result.report;
    rep.detector = dets.detector;
    rep.config = cfg;
    rep.num_gt = num_gt_used;
    rep.num_detections = num_dets_used;

    rep.map = mean_over(0, std::nullopt);
    if (auto t50 = threshold_index(0.50)) rep.ap50 = mean_over(0, t50);
    if (auto t75 = threshold_index(0.75)) rep.ap75 = mean_over(0, t75);
    for (std::size_t a = 1; a < A; ++a) {
        auto v = mean_over(a, std::nullopt);
        if (cfg.area_ranges[a].label == "small") rep.ap_small = v;
        else if (cfg.area_ranges[a].label == "medium") rep.ap_medium = v;
        else if (cfg.area_ranges[a].label == "large") rep.ap_large = v;
    }

    {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t c = 0; c < num_classes; ++c)
                if (recall[0][t][c]) {
                    sum += *recall[0][t][c];
                    ++n;
                }
        if (n > 0) rep.ar = 100.0 * sum / static_cast<double>(n);
    }

    auto t50 = threshold_index(0.50);
    for (std::size_t c = 0; c < num_classes; ++c) {
        EvalReport::PerClass pc;
        pc.label = ds.schema.labels[c].name;
        double ap_sum = 0.0, ar_sum = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 0; t < T; ++t) {
            if (!ap[0][t][c]) continue;
            ap_sum += *ap[0][t][c];
            ar_sum += *recall[0][t][c];
            ++n;
        }
        if (n > 0) {
            pc.ap = 100.0 * ap_sum / static_cast<double>(n);
            pc.ar = 100.0 * ar_sum / static_cast<double>(n);
        }
        if (t50 && ap[0][*t50][c]) pc.ap50 = 100.0 * *ap[0][*t50][c];
        rep.per_class.push_back(std::move(pc));
    }

    return result;
}

inline EvalReport evaluate(const LayoutDataset& ds, const DetectionSet& dets,
                           const EvalConfig& cfg = EvalConfig{}) {
    return evaluate_full(ds, dets, cfg).report;
}

/// Label-by-run AP50 grid for comparing evaluation runs.
struct ComparisonTable {
    std::vector<std::string> run_names;                       ///< columns
    std::vector<std::string> labels;                          ///< rows
    std::vector<std::vector<std::optional<double>>> cells;    ///< [row][col]
};

/// Rows = schema labels, columns = runs, cells = per-class AP50.
/// All reports must share one label set.
inline ComparisonTable per_label_report(
    const std::vector<std::pair<std::string, EvalReport>>& reports) {
    if (reports.empty())
        throw InvalidArgumentError("per_label_report: no reports given");
    ComparisonTable table;
    for (const auto& pc : reports.front().second.per_class)
        table.labels.push_back(pc.label);
    for (const auto& [name, rep] : reports) {
        if (rep.per_class.size() != table.labels.size())
            throw SchemaMismatchError("per_label_report: reports disagree on labels",
                                      {name});
        for (std::size_t i = 0; i < table.labels.size(); ++i)
            if (rep.per_class[i].label != table.labels[i])
                throw SchemaMismatchError("per_label_report: reports disagree on labels",
                                          {rep.per_class[i].label});
        table.run_names.push_back(name);
    }
    table.cells.assign(table.labels.size(),
                       std::vector<std::optional<double>>(reports.size()));
    for (std::size_t col = 0; col < reports.size(); ++col)
        for (std::size_t row = 0; row < table.labels.size(); ++row)
            table.cells[row][col] = reports[col].second.per_class[row].ap50;
    return table;
}

inline nlohmann::json eval_config_to_json(const EvalConfig& cfg) {
    nlohmann::json areas = nlohmann::json::array();
    for (const auto& r : cfg.area_ranges) {
        nlohmann::json o{{"label", r.label}, {"lo", r.lo}};
        if (std::isfinite(r.hi))
            o["hi"] = r.hi;
        else
            o["hi"] = nullptr;
        areas.push_back(std::move(o));
    }
    return {{"iou_thresholds", cfg.iou_thresholds},
            {"recall_points", cfg.recall_points.size()},
            {"area_ranges", areas},
            {"max_detections", cfg.max_detections}};
}

/// Report JSON: {detector, dataset, config, metrics{...}, per_class{...}}.
inline nlohmann::json eval_report_to_json(const EvalReport& rep) {
    auto opt = [](const std::optional<double>& v) -> nlohmann::json {
        if (v) return *v;
        return nullptr;
    };
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& pc : rep.per_class)
        per_class[pc.label] = {{"AP50", opt(pc.ap50)}, {"AP", opt(pc.ap)},
                               {"AR", opt(pc.ar)}};
    return {{"detector", rep.detector},
            {"backbone", rep.backbone},
            {"dataset", rep.dataset_name},
            {"config", eval_config_to_json(rep.config)},
            {"counts", {{"gt", rep.num_gt}, {"detections", rep.num_detections}}},
            {"metrics",
             {{"mAP", opt(rep.map)},
              {"AP50", opt(rep.ap50)},
              {"AP75", opt(rep.ap75)},
              {"APs", opt(rep.ap_small)},
              {"APm", opt(rep.ap_medium)},
              {"APl", opt(rep.ap_large)},
              {"AR", opt(rep.ar)}}},
            {"per_class", per_class}};
}

/// Inverse of eval_report_to_json for the fields the reporting module needs.
inline EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport rep;
    auto opt = [](const nlohmann::json& v) -> std::optional<double> {
        if (v.is_null()) return std::nullopt;
        return v.get<double>();
    };
    try {
        rep.detector = j.value("detector", std::string{});
        rep.backbone = j.value("backbone", std::string{"-"});
        rep.dataset_name = j.value("dataset", std::string{});
        const auto& m = j.at("metrics");
        rep.map = opt(m.at("mAP"));
        rep.ap50 = opt(m.at("AP50"));
        rep.ap75 = opt(m.at("AP75"));
        rep.ap_small = opt(m.at("APs"));
        rep.ap_medium = opt(m.at("APm"));
        rep.ap_large = opt(m.at("APl"));
        rep.ar = opt(m.at("AR"));
        if (j.contains("counts")) {
            rep.num_gt = j.at("counts").value("gt", 0u);
            rep.num_detections = j.at("counts").value("detections", 0u);
        }
        if (j.contains("per_class")) {
            for (const auto& [label, v] : j.at("per_class").items()) {
                EvalReport::PerClass pc;
                pc.label = label;
                pc.ap50 = opt(v.at("AP50"));
                pc.ap = opt(v.at("AP"));
                pc.ar = opt(v.at("AR"));
                rep.per_class.push_back(std::move(pc));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("eval report: ") + e.what());
    }
    return rep;
}

} // namespace slld
