#pragma once

// Programmatic dataset/detection builders shared by the unit tests and the
// acceptance runner.

#include <cstdint>
#include <string>
#include <vector>

#include <slld/dataset.hpp>
#include <slld/detection_ops.hpp>
#include <slld/geometry.hpp>
#include <slld/random.hpp>

namespace testsupport {

inline slld::LabelSchema make_schema(const std::vector<std::string>& names) {
    slld::LabelSchema s;
    int id = 1;
    for (const auto& n : names) s.labels.push_back({id++, n});
    return s;
}

inline slld::ImageRecord make_image(std::int64_t id, double w = 612, double h = 729,
                                    const std::string& corpus = "") {
    slld::ImageRecord r;
    r.image_id = id;
    r.file_name = "img_" + std::to_string(id) + ".png";
    r.width = w;
    r.height = h;
    r.source_corpus = corpus;
    return r;
}

inline slld::GroundTruthInstance make_gt(std::int64_t ann, std::int64_t image, int label,
                                         slld::BBox box, bool crowd = false) {
    slld::GroundTruthInstance g;
    g.ann_id = ann;
    g.image_id = image;
    g.label_id = label;
    g.box = box;
    g.iscrowd = crowd;
    return g;
}

inline slld::Detection make_det(std::int64_t image, int label, slld::BBox box,
                                double score) {
    slld::Detection d;
    d.image_id = image;
    d.label_id = label;
    d.box = box;
    d.score = score;
    return d;
}

/// Two pages, two labels, four instances; the workhorse small dataset.
inline slld::LayoutDataset tiny_dataset() {
    slld::LayoutDataset ds;
    ds.schema = make_schema({"body", "figure"});
    ds.images = {make_image(1), make_image(2)};
    ds.instances = {
        make_gt(1, 1, 1, {50, 50, 200, 300}),
        make_gt(2, 1, 2, {300, 100, 150, 150}),
        make_gt(3, 2, 1, {40, 360, 250, 280}),
        make_gt(4, 2, 1, {320, 60, 180, 400}),
    };
    return ds;
}

/// Dataset with the instance-count profile of the first synthesis corpus:
/// 1275 body and 100 title boxes over `images` pages.
inline slld::LayoutDataset imbalance_dataset(std::size_t images = 200) {
    slld::LayoutDataset ds;
    ds.schema = make_schema({"title", "body"});
    for (std::size_t i = 1; i <= images; ++i)
        ds.images.push_back(make_image(static_cast<std::int64_t>(i)));

    std::mt19937_64 rng(4051);
    std::int64_t ann = 1;
    auto random_box = [&] {
        double w = 60.0 + slld::uniform_unit(rng) * 300.0;
        double h = 40.0 + slld::uniform_unit(rng) * 300.0;
        double x = slld::uniform_unit(rng) * (612.0 - w);
        double y = slld::uniform_unit(rng) * (729.0 - h);
        return slld::BBox(x, y, w, h);
    };
    for (int i = 0; i < 100; ++i) {
        auto img = static_cast<std::int64_t>(1 + slld::uniform_index(rng, images));
        ds.instances.push_back(make_gt(ann++, img, 1, random_box()));
    }
    for (int i = 0; i < 1275; ++i) {
        auto img = static_cast<std::int64_t>(1 + slld::uniform_index(rng, images));
        ds.instances.push_back(make_gt(ann++, img, 2, random_box()));
    }
    return ds;
}

/// `n` images, one body box each; used for split-fraction checks.
inline slld::LayoutDataset many_image_dataset(std::size_t n) {
    slld::LayoutDataset ds;
    ds.schema = make_schema({"body"});
    for (std::size_t i = 1; i <= n; ++i) {
        ds.images.push_back(make_image(static_cast<std::int64_t>(i)));
        ds.instances.push_back(make_gt(static_cast<std::int64_t>(i),
                                       static_cast<std::int64_t>(i), 1,
                                       {100, 100, 300, 400}));
    }
    return ds;
}

/// Detections equal to every ground truth with score 1.0.
inline slld::DetectionSet perfect_detections(const slld::LayoutDataset& ds) {
    slld::DetectionSet out;
    out.detector = "perfect";
    for (const auto& inst : ds.instances)
        out.add(make_det(inst.image_id, inst.label_id, inst.box, 1.0));
    return out;
}

/// Randomized evaluation scenario: a handful of images and classes, ground
/// truths across all area buckets with occasional crowd boxes, detections
/// mixing jittered copies and noise, scores drawn from a coarse grid so tied
/// scores occur.
struct RandomEvalCase {
    slld::LayoutDataset ds;
    slld::DetectionSet dets;
};

inline RandomEvalCase random_eval_case(std::mt19937_64& rng) {
    RandomEvalCase out;
    std::size_t n_images = 1 + slld::uniform_index(rng, 5);
    std::size_t n_classes = 1 + slld::uniform_index(rng, 3);

    std::vector<std::string> names;
    for (std::size_t c = 0; c < n_classes; ++c) names.push_back("c" + std::to_string(c));
    out.ds.schema = make_schema(names);

    const double W = 640.0, H = 640.0;
    std::int64_t ann = 1;
    for (std::size_t i = 1; i <= n_images; ++i) {
        out.ds.images.push_back(make_image(static_cast<std::int64_t>(i), W, H));
        std::size_t n_boxes = slld::uniform_index(rng, 21); // 0..20
        for (std::size_t b = 0; b < n_boxes; ++b) {
            // Pick a side so areas land in all three buckets: small needs
            // area < 1024 (side < 32), large needs >= 9216 (side >= 96).
            double side;
            switch (slld::uniform_index(rng, 3)) {
                case 0: side = 8.0 + slld::uniform_unit(rng) * 20.0; break;
                case 1: side = 40.0 + slld::uniform_unit(rng) * 50.0; break;
                default: side = 100.0 + slld::uniform_unit(rng) * 150.0; break;
            }
            double w = side * (0.6 + slld::uniform_unit(rng) * 0.8);
            double h = side * side / w;
            double x = slld::uniform_unit(rng) * (W - w);
            double y = slld::uniform_unit(rng) * (H - h);
            bool crowd = slld::uniform_unit(rng) < 0.1;
            int label = static_cast<int>(1 + slld::uniform_index(rng, n_classes));
            out.ds.instances.push_back(
                make_gt(ann++, static_cast<std::int64_t>(i), label, {x, y, w, h}, crowd));
        }
    }

    auto grid_score = [&] { return (1.0 + slld::uniform_index(rng, 9)) / 10.0; };
    for (const auto& inst : out.ds.instances) {
        // Jittered copy, sometimes duplicated, sometimes with the wrong label.
        int copies = static_cast<int>(slld::uniform_index(rng, 3)); // 0..2
        for (int k = 0; k < copies; ++k) {
            double jx = (slld::uniform_unit(rng) - 0.5) * inst.box.w * 0.4;
            double jy = (slld::uniform_unit(rng) - 0.5) * inst.box.h * 0.4;
            double sw = 0.8 + slld::uniform_unit(rng) * 0.4;
            double sh = 0.8 + slld::uniform_unit(rng) * 0.4;
            int label = slld::uniform_unit(rng) < 0.15
                            ? static_cast<int>(
                                  1 + slld::uniform_index(rng, out.ds.schema.size()))
                            : inst.label_id;
            out.dets.add(make_det(inst.image_id, label,
                                  {inst.box.x + jx, inst.box.y + jy, inst.box.w * sw,
                                   inst.box.h * sh},
                                  grid_score()));
        }
    }
    for (std::size_t i = 1; i <= n_images; ++i) {
        std::size_t noise = slld::uniform_index(rng, 6);
        for (std::size_t k = 0; k < noise; ++k) {
            double w = 10.0 + slld::uniform_unit(rng) * 160.0;
            double h = 10.0 + slld::uniform_unit(rng) * 160.0;
            double x = slld::uniform_unit(rng) * (W - w);
            double y = slld::uniform_unit(rng) * (H - h);
            int label = static_cast<int>(1 + slld::uniform_index(rng, n_classes));
            out.dets.add(
                make_det(static_cast<std::int64_t>(i), label, {x, y, w, h}, grid_score()));
        }
    }
    return out;
}

} // namespace testsupport
