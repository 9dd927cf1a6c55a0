// Release gate: one check per shipping requirement, one PASS/FAIL line each.
// Run through ctest or directly; exits nonzero if any check fails.

#include <slld/slld.hpp>

#include "support/fixtures.hpp"
#include "support/oracle.hpp"
#include "support/xml_check.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string fixture(const std::string& name) {
    const char* dir = std::getenv("SLLD_FIXTURES");
    std::filesystem::path base = dir ? dir : "tests/fixtures";
    return (base / name).string();
}

struct CheckFailure {
    std::string detail;
};

void demand(bool cond, const std::string& detail) {
    if (!cond) throw CheckFailure{detail};
}

bool opt_close(const std::optional<double>& a, const std::optional<double>& b,
               double tol = 1e-9) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return std::abs(*a - *b) <= tol;
}

std::string opt_str(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. evaluator agrees with a brute-force reference on randomized scenarios

std::string check_evaluator_oracle() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    const int cases = 220;
    double worst = 0.0;

    for (int i = 0; i < cases; ++i) {
        auto c = testsupport::random_eval_case(rng);
        slld::EvalReport got = slld::evaluate(c.ds, c.dets);
        testsupport::RefReport want = testsupport::ref_evaluate(c.ds, c.dets);

        auto probe = [&](const std::optional<double>& g, const std::optional<double>& w,
                         const char* what) {
            demand(opt_close(g, w),
                   "case " + std::to_string(i) + " " + what + ": got " + opt_str(g) +
                       ", reference " + opt_str(w));
            if (g && w) worst = std::max(worst, std::abs(*g - *w));
        };
        probe(got.map, want.map, "mAP");
        probe(got.ap50, want.ap50, "AP50");
        probe(got.ap75, want.ap75, "AP75");
        probe(got.ap_small, want.ap_small, "APs");
        probe(got.ap_medium, want.ap_medium, "APm");
        probe(got.ap_large, want.ap_large, "APl");
        probe(got.ar, want.ar, "AR");
        demand(got.per_class.size() == want.per_class.size(),
               "case " + std::to_string(i) + ": per-class row count mismatch");
        for (std::size_t k = 0; k < got.per_class.size(); ++k) {
            probe(got.per_class[k].ap50, want.per_class[k].ap50, "class AP50");
            probe(got.per_class[k].ap, want.per_class[k].ap, "class AP");
            probe(got.per_class[k].ar, want.per_class[k].ar, "class AR");
        }
    }

    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    demand(secs <= 60.0, "took " + std::to_string(secs) + "s, budget 60s");
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d cases, max deviation %.2e, %.1fs", cases, worst,
                  secs);
    return buf;
}

// ---------------------------------------------------------------------------
// 2. perfect and empty detectors hit the exact boundary scores

std::string check_degenerate_detectors() {
    slld::LayoutDataset ds = testsupport::tiny_dataset();

    slld::EvalReport perfect = slld::evaluate(ds, testsupport::perfect_detections(ds));
    for (auto [v, what] : {std::pair{perfect.map, "mAP"}, {perfect.ap50, "AP50"},
                           {perfect.ap75, "AP75"}, {perfect.ar, "AR"}})
        demand(opt_close(v, 100.0), std::string("perfect detector ") + what + " = " +
                                        opt_str(v) + ", expected 100");

    slld::EvalReport empty = slld::evaluate(ds, slld::DetectionSet{});
    for (auto [v, what] : {std::pair{empty.map, "mAP"}, {empty.ap50, "AP50"},
                           {empty.ar, "AR"}})
        demand(opt_close(v, 0.0), std::string("empty detector ") + what + " = " +
                                      opt_str(v) + ", expected 0");
    for (const auto& pc : empty.per_class)
        demand(opt_close(pc.ap, 0.0), "empty detector class " + pc.label + " AP not 0");

    // A class with no ground truth stays undefined and renders as "-".
    slld::LayoutDataset lopsided;
    lopsided.schema = testsupport::make_schema({"body", "figure"});
    lopsided.images = {testsupport::make_image(1)};
    lopsided.instances = {testsupport::make_gt(1, 1, 1, {0, 0, 100, 100})};
    slld::DetectionSet dets;
    dets.detector = "partial";
    dets.add(testsupport::make_det(1, 1, {0, 0, 100, 100}, 1.0));
    slld::EvalReport rep = slld::evaluate(lopsided, dets);
    demand(!rep.per_class[1].ap50.has_value(), "no-gt class has a defined AP50");
    demand(!rep.per_class[1].ar.has_value(), "no-gt class has a defined AR");

    auto table = slld::per_label_report({{"partial", rep}});
    demand(slld::comparison_to_csv(table).find(",-") != std::string::npos,
           "undefined cell not rendered as \"-\"");
    return "perfect=100, empty=0, no-gt classes undefined";
}

// ---------------------------------------------------------------------------
// 3. suppression equals the quadratic reference, order included

std::string check_nms_oracle() {
    std::mt19937_64 rng(3033);
    const int cases = 1000;
    for (int rep = 0; rep < cases; ++rep) {
        int n = 1 + static_cast<int>(slld::uniform_index(rng, 25));
        std::vector<slld::Detection> dets;
        for (int i = 0; i < n; ++i) {
            double score = 0.05 * (1 + static_cast<int>(slld::uniform_index(rng, 19)));
            dets.push_back(testsupport::make_det(
                1, 1,
                {slld::uniform_real(rng, 0, 90), slld::uniform_real(rng, 0, 90),
                 slld::uniform_real(rng, 4, 50), slld::uniform_real(rng, 4, 50)},
                score));
        }
        double thresh = slld::uniform_real(rng, 0.1, 0.9);
        auto got = slld::nms(dets, thresh);
        auto want = testsupport::ref_nms(dets, thresh);
        demand(got.size() == want.size(),
               "case " + std::to_string(rep) + ": kept " + std::to_string(got.size()) +
                   " vs reference " + std::to_string(want.size()));
        for (std::size_t i = 0; i < got.size(); ++i)
            demand(got[i] == want[i],
                   "case " + std::to_string(rep) + ": order diverges at rank " +
                       std::to_string(i));
    }
    return std::to_string(cases) + " instances, exact set and order";
}

// ---------------------------------------------------------------------------
// 4. box delta codec round-trips and is frame-invariant

std::string check_codec_roundtrip() {
    std::mt19937_64 rng(4044);
    const int pairs = 10000;
    double worst = 0.0;
    for (int i = 0; i < pairs; ++i) {
        slld::BBox anchor{slld::uniform_real(rng, -100, 700),
                          slld::uniform_real(rng, -100, 700),
                          slld::uniform_real(rng, 4, 250),
                          slld::uniform_real(rng, 4, 250)};
        slld::BBox box{slld::uniform_real(rng, 0, 700), slld::uniform_real(rng, 0, 700),
                       slld::uniform_real(rng, 4, 250), slld::uniform_real(rng, 4, 250)};
        slld::BBox back = slld::decode(slld::encode(box, anchor), anchor);
        for (auto [g, w] : {std::pair{back.x, box.x}, {back.y, box.y}, {back.w, box.w},
                            {back.h, box.h}}) {
            double err = std::abs(g - w);
            worst = std::max(worst, err);
            demand(err <= 1e-9, "round-trip error " + std::to_string(err) + " at pair " +
                                    std::to_string(i));
        }

        // Same pair expressed in a shifted and a scaled frame.
        double tx = slld::uniform_real(rng, -300, 300);
        double ty = slld::uniform_real(rng, -300, 300);
        double s = slld::uniform_real(rng, 0.25, 4.0);
        slld::BoxDelta base = slld::encode(box, anchor);
        slld::BoxDelta moved =
            slld::encode({box.x + tx, box.y + ty, box.w, box.h},
                         {anchor.x + tx, anchor.y + ty, anchor.w, anchor.h});
        slld::BoxDelta zoomed = slld::encode({box.x * s, box.y * s, box.w * s, box.h * s},
                                             {anchor.x * s, anchor.y * s, anchor.w * s,
                                              anchor.h * s});
        for (auto [g, w] : {std::pair{moved.dx, base.dx}, {moved.dy, base.dy},
                            {moved.dw, base.dw}, {moved.dh, base.dh},
                            {zoomed.dx, base.dx}, {zoomed.dy, base.dy},
                            {zoomed.dw, base.dw}, {zoomed.dh, base.dh}})
            demand(std::abs(g - w) <= 1e-9,
                   "delta invariance violated at pair " + std::to_string(i));
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d pairs, max round-trip error %.2e", pairs, worst);
    return buf;
}

// ---------------------------------------------------------------------------
// 5. anchor generation: 40 anchors per grid point, exact shapes

std::string check_anchor_generation() {
    slld::AnchorConfig cfg = slld::default_anchor_config();
    demand(cfg.scales == std::vector<double>{32, 64, 128, 256, 512},
           "scale ladder is not 32..512 in powers of two");
    demand(cfg.aspect_ratios.size() == 8, "ratio count is not 8");

    for (auto [w, h] : {std::pair{612.0, 729.0}, {800.0, 600.0}}) {
        cfg.image_w = w;
        cfg.image_h = h;
        slld::AnchorSet set = slld::generate_anchors(cfg);
        std::size_t grid = static_cast<std::size_t>(set.grid_w) *
                           static_cast<std::size_t>(set.grid_h);
        demand(set.anchors.size() == 40 * grid,
               "grid " + std::to_string(grid) + " produced " +
                   std::to_string(set.anchors.size()) + " anchors, expected 40 per point");
        for (const auto& a : set.anchors) {
            double s = cfg.scales[static_cast<std::size_t>(a.scale_index)];
            double r = cfg.aspect_ratios[static_cast<std::size_t>(a.ratio_index)];
            demand(std::abs(a.box.area() - s * s) <= 1e-6 * s * s,
                   "anchor area drifts from scale^2");
            demand(std::abs(a.box.aspect_ratio() - r) <= 1e-6 * r,
                   "anchor shape drifts from its ratio");
        }
    }
    // The canonical page grid: 38 x 45 points.
    cfg.image_w = 612.0;
    cfg.image_h = 729.0;
    auto set = slld::generate_anchors(cfg);
    demand(set.anchors.size() == 68400, "canonical page must carry 68400 anchors");
    return "40 per grid point, 68400 on the canonical page, shapes within 1e-6";
}

// ---------------------------------------------------------------------------
// 6. clustering: monotone convergence, planted recovery, determinism

std::string check_kmeans_properties() {
    std::mt19937_64 rng(6066);

    // Monotone inertia on assorted inputs.
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> values;
        int n = 50 + static_cast<int>(slld::uniform_index(rng, 400));
        for (int i = 0; i < n; ++i) values.push_back(slld::uniform_real(rng, 0.1, 4.0));
        int k = 1 + static_cast<int>(slld::uniform_index(rng, 12));
        auto c = slld::fit_kmeans_1d(values, k, rep);
        for (std::size_t i = 1; i < c.inertia_trace.size(); ++i)
            demand(c.inertia_trace[i] <= c.inertia_trace[i - 1] + 1e-12,
                   "inertia rose between iterations");
    }

    // Two planted clusters around 0.2 and 3.0 recovered exactly.
    std::vector<double> planted;
    for (int i = 0; i < 70; ++i) planted.push_back(slld::uniform_real(rng, 0.18, 0.22));
    for (int i = 0; i < 50; ++i) planted.push_back(slld::uniform_real(rng, 2.9, 3.1));
    slld::deterministic_shuffle(planted, rng);
    auto best = testsupport::ref_two_means(planted);
    for (std::uint64_t seed : {1ull, 17ull, 365ull}) {
        auto c = slld::fit_kmeans_1d(planted, 2, seed);
        demand(std::abs(c.centroids[0] - best.c0) <= 1e-9 &&
                   std::abs(c.centroids[1] - best.c1) <= 1e-9,
               "planted centroids not recovered at seed " + std::to_string(seed));
        demand(c.counts[0] == 70 && c.counts[1] == 50, "planted membership wrong");
    }

    // Byte-identical serialized output under a fixed seed.
    std::vector<double> values;
    for (int i = 0; i < 300; ++i) values.push_back(slld::uniform_real(rng, 0.1, 4.0));
    auto a = slld::clustering_to_json(slld::fit_kmeans_1d(values, 8, 99)).dump();
    auto b = slld::clustering_to_json(slld::fit_kmeans_1d(values, 8, 99)).dump();
    demand(a == b, "serialized clustering differs across identical runs");
    return "monotone traces, planted 0.2/3.0 recovered, byte-identical reruns";
}

// ---------------------------------------------------------------------------
// 7. corpus merge conserves images and instances through the remaps

std::string check_merge_conservation() {
    auto target = slld::canonical_schema();

    auto soto_raw = slld::load_coco(fixture("soto_like.json"), "soto");
    auto icdar_raw = slld::load_coco(fixture("icdar_like.json"), "icdar2013");
    auto grotoap_raw = slld::load_coco(fixture("grotoap_like.json"), "grotoap");

    auto soto = slld::remap_labels(soto_raw, slld::load_remap(fixture("soto_remap.json")),
                                   target);
    auto icdar =
        slld::remap_labels(icdar_raw, slld::LabelRemap::identity(icdar_raw.schema), target);
    auto grotoap = slld::remap_labels(
        grotoap_raw, slld::load_remap(fixture("grotoap_remap.json")), target);

    auto merged = slld::merge_datasets({soto, icdar, grotoap}, target);
    merged.validate();

    std::size_t want_images =
        soto_raw.images.size() + icdar_raw.images.size() + grotoap_raw.images.size();
    std::size_t want_instances =
        soto.instances.size() + icdar.instances.size() + grotoap.instances.size();
    demand(merged.images.size() == want_images,
           "image count " + std::to_string(merged.images.size()) + " != sum " +
               std::to_string(want_images));
    demand(merged.instances.size() == want_instances,
           "instance count " + std::to_string(merged.instances.size()) + " != sum " +
               std::to_string(want_instances));

    // Caption variants fold into one label whose count is exactly their sum.
    auto count_of = [](const slld::LayoutDataset& ds, const std::string& label) {
        auto id = ds.schema.id_of(label);
        std::size_t n = 0;
        for (const auto& inst : ds.instances)
            if (id && inst.label_id == *id) ++n;
        return n;
    };
    std::size_t caption_sources = count_of(soto_raw, "table_caption") +
                                  count_of(soto_raw, "figure_caption") +
                                  count_of(icdar_raw, "caption") +
                                  count_of(grotoap_raw, "caption");
    auto stats = slld::instance_stats(merged);
    auto stat_of = [&](const std::string& label) {
        for (const auto& [name, n] : stats.counts)
            if (name == label) return n;
        return std::size_t{0};
    };
    demand(stat_of("caption") == caption_sources,
           "caption count " + std::to_string(stat_of("caption")) + " != source sum " +
               std::to_string(caption_sources));
    demand(stat_of("body") == 1275,
           "body count " + std::to_string(stat_of("body")) + ", expected 1275");
    demand(stat_of("title") == 100,
           "title count " + std::to_string(stat_of("title")) + ", expected 100");

    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu images, %zu instances, caption=%zu body=%zu",
                  merged.images.size(), merged.instances.size(), stat_of("caption"),
                  stat_of("body"));
    return buf;
}

// ---------------------------------------------------------------------------
// 8. the 1550-page fixture splits 325/1225, reproducibly

std::string check_split_reproduction() {
    auto ds = slld::load_coco(fixture("d2_like.json"));
    demand(ds.images.size() == 1550,
           "fixture has " + std::to_string(ds.images.size()) + " images, expected 1550");

    const double fraction = 325.0 / 1550.0;
    auto first = slld::split(ds, fraction, 17);
    auto second = slld::split(ds, fraction, 17);

    std::size_t n_test = first.image_ids_in_split(slld::Split::test).size();
    std::size_t n_train = first.image_ids_in_split(slld::Split::train).size();
    demand(n_test == 325, "test split is " + std::to_string(n_test) + ", expected 325");
    demand(n_train == 1225,
           "train split is " + std::to_string(n_train) + ", expected 1225");
    demand(first.split_assignments == second.split_assignments,
           "repeated split differs under the same seed");
    return "325 test / 1225 train, identical on rerun";
}

// ---------------------------------------------------------------------------
// 9. fitted anchor ratios cover the corpus at least as well as 0.5/1/2

std::string check_recall_ordering() {
    auto target = slld::canonical_schema();
    auto soto = slld::remap_labels(slld::load_coco(fixture("soto_like.json"), "soto"),
                                   slld::load_remap(fixture("soto_remap.json")), target);
    auto icdar_raw = slld::load_coco(fixture("icdar_like.json"), "icdar2013");
    auto icdar =
        slld::remap_labels(icdar_raw, slld::LabelRemap::identity(icdar_raw.schema), target);
    auto grotoap =
        slld::remap_labels(slld::load_coco(fixture("grotoap_like.json"), "grotoap"),
                           slld::load_remap(fixture("grotoap_remap.json")), target);
    auto merged = slld::merge_datasets({soto, icdar, grotoap}, target);

    auto clustering = slld::fit_ratio_kmeans(merged, 50, 17);
    auto ratios = slld::select_anchor_ratios(clustering, 8);
    demand(ratios.size() == 8, "selected " + std::to_string(ratios.size()) +
                                   " ratios, expected 8");

    slld::AnchorConfig fitted;
    fitted.aspect_ratios = ratios;
    auto fitted_recall = slld::anchor_recall(merged, fitted, 0.5);
    auto baseline_recall =
        slld::anchor_recall(merged, slld::baseline_anchor_config(), 0.5);

    demand(fitted_recall.overall.has_value() && baseline_recall.overall.has_value(),
           "overall recall undefined");
    demand(*fitted_recall.overall >= *baseline_recall.overall,
           "fitted recall " + opt_str(fitted_recall.overall) + " below baseline " +
               opt_str(baseline_recall.overall));
    char buf[96];
    std::snprintf(buf, sizeof buf, "fitted %.4f >= baseline %.4f at IoU 0.5",
                  *fitted_recall.overall, *baseline_recall.overall);
    return buf;
}

// ---------------------------------------------------------------------------
// 10. report table layout and well-formed, reproducible charts

std::string check_report_fidelity() {
    slld::LayoutDataset ds = slld::load_coco(fixture("golden_dataset.json"),
                                             slld::canonical_schema());
    auto dets = slld::load_detections(fixture("golden_detections.json"), "frozen");
    slld::EvalReport rep = slld::evaluate(ds, dets);
    rep.dataset_name = "fixture";

    auto table = slld::render_metric_table({{"frozen", rep}});
    demand(table.csv.rfind("Detector,Backbone,Data Set,mAP,AP50,AP75,APs,APm,APl,AR\n",
                           0) == 0,
           "column order wrong in csv header");
    demand(table.markdown.rfind("| Detector | Backbone | Data Set | mAP | AP50 | AP75 | "
                                "APs | APm | APl | AR |\n",
                                0) == 0,
           "column order wrong in markdown header");
    auto table2 = slld::render_metric_table({{"frozen", rep}});
    demand(table.markdown == table2.markdown && table.csv == table2.csv,
           "metric table differs across renders");

    std::vector<double> ratios = slld::instance_aspect_ratios(ds);
    slld::ChartSpec hist_spec;
    hist_spec.title = "ratio distribution";
    std::string hist = slld::render_histogram(ratios, 12, hist_spec);
    auto hist_ok = testsupport::check_xml(hist);
    demand(hist_ok.ok, "histogram svg: " + hist_ok.error);
    demand(hist == slld::render_histogram(ratios, 12, hist_spec),
           "histogram differs across renders");

    auto comparison = slld::per_label_report({{"frozen", rep}});
    slld::BarTable bars;
    bars.categories = comparison.labels;
    bars.series = comparison.run_names;
    bars.values = comparison.cells;
    slld::ChartSpec bar_spec;
    bar_spec.kind = slld::ChartSpec::Kind::grouped_bars;
    bar_spec.title = "per-label AP50";
    bar_spec.series_names = bars.series;
    std::string chart = slld::render_grouped_bars(bars, bar_spec);
    auto chart_ok = testsupport::check_xml(chart);
    demand(chart_ok.ok, "bar chart svg: " + chart_ok.error);
    demand(chart == slld::render_grouped_bars(bars, bar_spec),
           "bar chart differs across renders");
    return "fixed columns, well-formed charts, byte-identical reruns";
}

struct Criterion {
    const char* name;
    std::function<std::string()> run;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"evaluator matches brute-force reference on random scenarios",
         check_evaluator_oracle},
        {"perfect/empty detectors hit exact boundary scores", check_degenerate_detectors},
        {"nms equals the quadratic reference exactly", check_nms_oracle},
        {"box delta codec round-trips and is frame-invariant", check_codec_roundtrip},
        {"anchor grid yields 40 exact-shape anchors per point", check_anchor_generation},
        {"ratio clustering converges monotonically and deterministically",
         check_kmeans_properties},
        {"corpus merge conserves counts through label remaps", check_merge_conservation},
        {"1550-page fixture splits 325/1225 deterministically", check_split_reproduction},
        {"fitted anchor ratios cover the corpus at least as well as 0.5/1/2",
         check_recall_ordering},
        {"metric tables and charts are exact and reproducible", check_report_fidelity},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool ok = true;
        try {
            detail = criteria[i].run();
        } catch (const CheckFailure& f) {
            ok = false;
            detail = f.detail;
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("unexpected error: ") + e.what();
        }
        std::printf("[%s] %2zu %s%s%s\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].name,
                    detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }

    if (failures > 0) {
        std::printf("%d of %zu checks failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu checks passed\n", criteria.size());
    return 0;
}
