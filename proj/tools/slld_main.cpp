// slld: dataset, anchor, and evaluation toolkit for document layout
// detection experiments. Single binary with subcommands; every command is
// deterministic under (inputs, flags, seed).
//
// Exit codes: 0 success, 2 I/O or input-parse failure, 3 contract violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <slld/slld.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// logging: SLLD_LOG selects the level (debug|info|warn|error), default info.
// Diagnostics go to stderr; stdout carries data only.

int log_threshold() {
    static const int level = [] {
        const char* e = std::getenv("SLLD_LOG");
        std::string s = e ? e : "info";
        for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (s == "debug") return 0;
        if (s == "warn") return 2;
        if (s == "error") return 3;
        return 1;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_threshold() <= 1) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_threshold() <= 0) std::cerr << "[debug] " << msg << "\n";
}

// ---------------------------------------------------------------------------
// small shared helpers

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw slld::IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw slld::IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw slld::IoError("write failed: " + path);
}

void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
    log_info("wrote " + path);
}

std::string stem_of(const std::string& path) {
    return fs::path(path).stem().string();
}

/// "WxH" -> (w, h)
std::pair<double, double> parse_size(const std::string& s, const std::string& flag) {
    auto x = s.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= s.size())
        throw slld::ParseError(flag + ": expected WxH, got \"" + s + "\"");
    try {
        return {std::stod(s.substr(0, x)), std::stod(s.substr(x + 1))};
    } catch (const std::exception&) {
        throw slld::ParseError(flag + ": expected WxH, got \"" + s + "\"");
    }
}

/// "IDX=VALUE" -> (idx, value), idx checked against `limit`.
std::pair<std::size_t, std::string> parse_indexed(const std::string& s,
                                                  std::size_t limit,
                                                  const std::string& flag) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
        throw slld::ParseError(flag + ": expected IDX=VALUE, got \"" + s + "\"");
    std::size_t idx = 0;
    try {
        idx = std::stoul(s.substr(0, eq));
    } catch (const std::exception&) {
        throw slld::ParseError(flag + ": non-numeric index in \"" + s + "\"");
    }
    if (idx >= limit)
        throw slld::InvalidArgumentError(flag + ": index " + std::to_string(idx) +
                                         " out of range (have " + std::to_string(limit) +
                                         " inputs)");
    return {idx, s.substr(eq + 1)};
}

json stats_to_json(const slld::InstanceStats& st) {
    json counts = json::object();
    for (const auto& [name, c] : st.counts) counts[name] = c;
    json j{{"counts", counts}, {"total", st.total}};
    auto ratio = st.imbalance_ratio();
    j["imbalance_ratio"] = ratio ? json(*ratio) : json(nullptr);
    return j;
}

void print_stats(const slld::InstanceStats& st) {
    std::printf("%-12s %10s\n", "label", "instances");
    for (const auto& [name, c] : st.counts)
        std::printf("%-12s %10zu\n", name.c_str(), c);
    std::printf("%-12s %10zu\n", "total", st.total);
    auto ratio = st.imbalance_ratio();
    if (ratio)
        std::printf("imbalance ratio: %.2f\n", *ratio);
    else
        std::printf("imbalance ratio: -\n");
}

slld::BarTable counts_bar_table(const slld::InstanceStats& st) {
    slld::BarTable bt;
    bt.series = {"instances"};
    for (const auto& [name, c] : st.counts) {
        bt.categories.push_back(name);
        bt.values.push_back({static_cast<double>(c)});
    }
    return bt;
}

std::string recall_csv(const slld::RecallTable& table) {
    std::string csv = "label,instances,covered,recall\n";
    auto fmt_recall = [](const std::optional<double>& r) {
        return r ? slld::detail::fmt(*r, 4) : std::string("-");
    };
    for (const auto& row : table.rows)
        csv += row.label + "," + std::to_string(row.instances) + "," +
               std::to_string(row.covered) + "," + fmt_recall(row.recall) + "\n";
    csv += "overall," + std::to_string(table.total_instances) + "," +
           std::to_string(table.total_covered) + "," + fmt_recall(table.overall) + "\n";
    return csv;
}

void print_recall(const slld::RecallTable& table) {
    std::printf("%-12s %10s %10s %8s\n", "label", "instances", "covered", "recall");
    auto line = [](const std::string& name, std::size_t n, std::size_t c,
                   const std::optional<double>& r) {
        if (r)
            std::printf("%-12s %10zu %10zu %8.4f\n", name.c_str(), n, c, *r);
        else
            std::printf("%-12s %10zu %10zu %8s\n", name.c_str(), n, c, "-");
    };
    for (const auto& row : table.rows)
        line(row.label, row.instances, row.covered, row.recall);
    line("overall", table.total_instances, table.total_covered, table.overall);
}

/// Emits the metric table, per-label CSV, and per-label AP50 chart for a set
/// of named evaluation reports. Shared by `evaluate` and `report`.
void write_report_family(const std::vector<std::pair<std::string, slld::EvalReport>>& runs,
                         const std::string& out_dir) {
    auto table = slld::render_metric_table(runs);
    write_text(out_dir + "/metrics.md", table.markdown);
    log_info("wrote " + out_dir + "/metrics.md");
    write_text(out_dir + "/metrics.csv", table.csv);
    log_info("wrote " + out_dir + "/metrics.csv");
    std::fputs(table.markdown.c_str(), stdout);

    auto comparison = slld::per_label_report(runs);
    write_text(out_dir + "/per_label.csv", slld::comparison_to_csv(comparison));
    log_info("wrote " + out_dir + "/per_label.csv");

    slld::BarTable bt;
    bt.categories = comparison.labels;
    bt.series = comparison.run_names;
    bt.values = comparison.cells;
    slld::ChartSpec spec;
    spec.kind = slld::ChartSpec::Kind::grouped_bars;
    spec.title = "AP50 by label";
    spec.x_label = "label";
    spec.y_label = "AP50 (%)";
    write_text(out_dir + "/per_label_ap50.svg", slld::render_grouped_bars(bt, spec));
    log_info("wrote " + out_dir + "/per_label_ap50.svg");
}

// ---------------------------------------------------------------------------
// subcommands

struct MergeOpts {
    std::vector<std::string> inputs;
    std::vector<std::string> remaps;        // IDX=path
    std::vector<std::string> corpora;       // IDX=tag
    std::vector<std::string> first_page_only;
    std::string rescale;                    // WxH, empty = keep
    double split_fraction = 0.0;            // 0 = no split file
    std::uint64_t seed = 17;
    std::string out;
};

int run_merge(const MergeOpts& o) {
    ensure_dir(o.out);
    const auto target = slld::canonical_schema();

    std::vector<std::string> tags(o.inputs.size());
    for (std::size_t i = 0; i < o.inputs.size(); ++i) tags[i] = stem_of(o.inputs[i]);
    for (const auto& c : o.corpora) {
        auto [idx, tag] = parse_indexed(c, o.inputs.size(), "--corpus");
        tags[idx] = tag;
    }
    std::vector<std::string> remap_paths(o.inputs.size());
    for (const auto& r : o.remaps) {
        auto [idx, path] = parse_indexed(r, o.inputs.size(), "--remap");
        remap_paths[idx] = path;
    }

    std::vector<slld::LayoutDataset> parts;
    for (std::size_t i = 0; i < o.inputs.size(); ++i) {
        auto part = slld::load_coco(o.inputs[i], tags[i]);
        log_debug(o.inputs[i] + ": " + std::to_string(part.images.size()) + " images, " +
                  std::to_string(part.instances.size()) + " instances");
        auto remap = remap_paths[i].empty() ? slld::LabelRemap::identity(part.schema)
                                            : slld::load_remap(remap_paths[i]);
        parts.push_back(slld::remap_labels(part, remap, target));
    }

    auto merged = slld::merge_datasets(parts, target);
    for (const auto& tag : o.first_page_only)
        merged = slld::filter_first_pages(merged, tag);
    if (!o.rescale.empty()) {
        auto [w, h] = parse_size(o.rescale, "--rescale");
        merged = slld::rescale_dataset(merged, w, h);
    }

    if (o.split_fraction > 0.0) {
        merged = slld::split(merged, o.split_fraction, o.seed);
        slld::save_split(merged.split_assignments, o.out + "/split.json");
        log_info("wrote " + o.out + "/split.json");
    }

    slld::save_coco(merged, o.out + "/merged.json");
    log_info("wrote " + o.out + "/merged.json");
    auto st = slld::instance_stats(merged);
    write_json(o.out + "/stats.json", stats_to_json(st));
    print_stats(st);

    json cfg{{"subcommand", "merge"},
             {"inputs", o.inputs},
             {"corpus_tags", tags},
             {"remaps", o.remaps},
             {"first_page_only", o.first_page_only},
             {"rescale", o.rescale},
             {"split_fraction", o.split_fraction},
             {"seed", o.seed},
             {"out", o.out}};
    write_json(o.out + "/run_config.json", cfg);
    return 0;
}

struct StatsOpts {
    std::string dataset;
    std::string out; // optional
};

int run_stats(const StatsOpts& o) {
    auto ds = slld::load_coco(o.dataset);
    auto st = slld::instance_stats(ds);
    print_stats(st);
    if (!o.out.empty()) {
        ensure_dir(o.out);
        write_json(o.out + "/stats.json", stats_to_json(st));
        slld::ChartSpec spec;
        spec.kind = slld::ChartSpec::Kind::grouped_bars;
        spec.title = "Instances per label";
        spec.x_label = "label";
        spec.y_label = "instances";
        write_text(o.out + "/label_counts.svg",
                   slld::render_grouped_bars(counts_bar_table(st), spec));
        log_info("wrote " + o.out + "/label_counts.svg");
        json cfg{{"subcommand", "stats"}, {"dataset", o.dataset}, {"out", o.out}};
        write_json(o.out + "/run_config.json", cfg);
    }
    return 0;
}

struct AnchorsOpts {
    std::string dataset;
    int k = 50;
    int n_ratios = 8;
    std::uint64_t seed = 17;
    std::vector<double> scales{32.0, 64.0, 128.0, 256.0, 512.0};
    double stride = 16.0;
    std::string image_size = "612x729";
    std::string out;
};

int run_anchors(const AnchorsOpts& o) {
    ensure_dir(o.out);
    auto ds = slld::load_coco(o.dataset);
    auto clustering = slld::fit_ratio_kmeans(ds, o.k, o.seed);
    auto ratios = slld::select_anchor_ratios(clustering, o.n_ratios);

    slld::AnchorConfig cfg;
    cfg.scales = o.scales;
    cfg.aspect_ratios = ratios;
    cfg.stride = o.stride;
    std::tie(cfg.image_w, cfg.image_h) = parse_size(o.image_size, "--image-size");
    cfg.validate();

    write_json(o.out + "/clustering.json", slld::clustering_to_json(clustering));
    write_json(o.out + "/anchor_config.json", slld::anchor_config_to_json(cfg));

    slld::ChartSpec spec;
    spec.title = "Aspect ratio distribution";
    spec.x_label = "w/h";
    spec.y_label = "instances";
    write_text(o.out + "/ratio_histogram.svg",
               slld::render_histogram(slld::instance_aspect_ratios(ds), 40, spec));
    log_info("wrote " + o.out + "/ratio_histogram.svg");

    std::printf("%-10s %8s\n", "centroid", "count");
    for (std::size_t i = 0; i < clustering.centroids.size(); ++i)
        std::printf("%-10.4f %8zu\n", clustering.centroids[i], clustering.counts[i]);
    std::printf("selected ratios:");
    for (double r : ratios) std::printf(" %.4f", r);
    std::printf("\n");

    json run{{"subcommand", "anchors"}, {"dataset", o.dataset},   {"k", o.k},
             {"n_ratios", o.n_ratios},  {"seed", o.seed},         {"scales", o.scales},
             {"stride", o.stride},      {"image_size", o.image_size}, {"out", o.out}};
    write_json(o.out + "/run_config.json", run);
    return 0;
}

struct AnchorRecallOpts {
    std::string dataset;
    std::string anchor_config;
    double iou = 0.5;
    std::string out; // optional
};

int run_anchor_recall(const AnchorRecallOpts& o) {
    auto ds = slld::load_coco(o.dataset);
    auto cfg = slld::anchor_config_from_json(slld::detail::parse_file(o.anchor_config));
    auto table = slld::anchor_recall(ds, cfg, o.iou);
    print_recall(table);
    if (!o.out.empty()) {
        ensure_dir(o.out);
        write_text(o.out + "/recall.csv", recall_csv(table));
        log_info("wrote " + o.out + "/recall.csv");
        json run{{"subcommand", "anchor-recall"},
                 {"dataset", o.dataset},
                 {"anchor_config", o.anchor_config},
                 {"iou", o.iou},
                 {"out", o.out}};
        write_json(o.out + "/run_config.json", run);
    }
    return 0;
}

struct EvaluateOpts {
    std::string dataset;
    std::string split_file;
    std::vector<std::string> detections;
    std::vector<std::string> compare;
    std::vector<std::string> names;
    std::string dataset_name;
    std::string backbone = "-";
    std::vector<double> iou_thresholds;
    int max_dets = 100;
    std::string out;
};

int run_evaluate(const EvaluateOpts& o) {
    ensure_dir(o.out);
    std::vector<std::string> files = o.detections;
    files.insert(files.end(), o.compare.begin(), o.compare.end());
    if (!o.names.empty() && o.names.size() != files.size())
        throw slld::InvalidArgumentError("--name count must match detection files");

    auto ds = slld::load_coco(o.dataset);
    if (!o.split_file.empty()) {
        ds.split_assignments = slld::load_split(o.split_file);
        ds.validate();
    }

    slld::EvalConfig cfg;
    if (!o.iou_thresholds.empty()) cfg.iou_thresholds = o.iou_thresholds;
    cfg.max_detections = o.max_dets;
    cfg.validate();

    std::string dataset_name = o.dataset_name.empty() ? stem_of(o.dataset) : o.dataset_name;
    std::vector<std::pair<std::string, slld::EvalReport>> runs;
    for (std::size_t i = 0; i < files.size(); ++i) {
        std::string name = o.names.empty() ? stem_of(files[i]) : o.names[i];
        auto dets = slld::load_detections(files[i], name);
        auto rep = slld::evaluate(ds, dets, cfg);
        rep.detector = name;
        rep.backbone = o.backbone;
        rep.dataset_name = dataset_name;
        write_json(o.out + "/report_" + name + ".json", slld::eval_report_to_json(rep));
        runs.emplace_back(name, std::move(rep));
    }

    write_report_family(runs, o.out);

    json run{{"subcommand", "evaluate"},
             {"dataset", o.dataset},
             {"split", o.split_file},
             {"detections", files},
             {"names", o.names},
             {"dataset_name", dataset_name},
             {"backbone", o.backbone},
             {"iou_thresholds", cfg.iou_thresholds},
             {"max_detections", cfg.max_detections},
             {"out", o.out}};
    write_json(o.out + "/run_config.json", run);
    return 0;
}

struct ReportOpts {
    std::vector<std::string> reports;
    std::vector<std::string> names;
    std::string out;
};

int run_report(const ReportOpts& o) {
    ensure_dir(o.out);
    if (!o.names.empty() && o.names.size() != o.reports.size())
        throw slld::InvalidArgumentError("--name count must match report files");

    std::vector<std::pair<std::string, slld::EvalReport>> runs;
    for (std::size_t i = 0; i < o.reports.size(); ++i) {
        auto rep = slld::eval_report_from_json(slld::detail::parse_file(o.reports[i]));
        std::string name = !o.names.empty() ? o.names[i]
                           : !rep.detector.empty() ? rep.detector
                                                   : stem_of(o.reports[i]);
        runs.emplace_back(name, std::move(rep));
    }

    write_report_family(runs, o.out);

    json run{{"subcommand", "report"},
             {"reports", o.reports},
             {"names", o.names},
             {"out", o.out}};
    write_json(o.out + "/run_config.json", run);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Document layout dataset, anchor, and evaluation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Key=value config file with [subcommand] sections; flags override");

    std::function<int()> action;

    auto merge_opts = std::make_shared<MergeOpts>();
    auto* merge = app.add_subcommand("merge", "Merge corpora onto the unified label schema");
    merge->add_option("--input", merge_opts->inputs, "Input COCO annotation file")
        ->required();
    merge->add_option("--remap", merge_opts->remaps,
                      "Label remap for input IDX, as IDX=remap.json");
    merge->add_option("--corpus", merge_opts->corpora,
                      "Corpus tag for input IDX, as IDX=tag (default: file stem)");
    merge->add_option("--first-page-only", merge_opts->first_page_only,
                      "Keep only first pages for this corpus tag (repeatable)");
    merge->add_option("--rescale", merge_opts->rescale, "Rescale pages to WxH");
    merge->add_option("--split-fraction", merge_opts->split_fraction,
                      "Emit split.json holding out this fraction as test")
        ->check(CLI::Range(0.0, 1.0));
    merge->add_option("--seed", merge_opts->seed, "Split shuffle seed");
    merge->add_option("--out", merge_opts->out, "Output directory")->required();
    merge->callback([&action, merge_opts] {
        action = [merge_opts] { return run_merge(*merge_opts); };
    });

    auto stats_opts = std::make_shared<StatsOpts>();
    auto* stats = app.add_subcommand("stats", "Per-label instance counts and imbalance");
    stats->add_option("--dataset", stats_opts->dataset, "COCO annotation file")->required();
    stats->add_option("--out", stats_opts->out, "Output directory (optional)");
    stats->callback([&action, stats_opts] {
        action = [stats_opts] { return run_stats(*stats_opts); };
    });

    auto anchors_opts = std::make_shared<AnchorsOpts>();
    auto* anchors = app.add_subcommand(
        "anchors", "Cluster aspect ratios and emit an anchor configuration");
    anchors->add_option("--dataset", anchors_opts->dataset, "COCO annotation file")
        ->required();
    anchors->add_option("--k", anchors_opts->k, "Cluster count");
    anchors->add_option("--ratios", anchors_opts->n_ratios, "Anchor ratios to select");
    anchors->add_option("--seed", anchors_opts->seed, "Clustering seed");
    anchors->add_option("--scales", anchors_opts->scales, "Anchor scales");
    anchors->add_option("--stride", anchors_opts->stride, "Feature stride");
    anchors->add_option("--image-size", anchors_opts->image_size, "Canonical page WxH");
    anchors->add_option("--out", anchors_opts->out, "Output directory")->required();
    anchors->callback([&action, anchors_opts] {
        action = [anchors_opts] { return run_anchors(*anchors_opts); };
    });

    auto recall_opts = std::make_shared<AnchorRecallOpts>();
    auto* recall = app.add_subcommand("anchor-recall",
                                      "Ground-truth coverage of an anchor layout");
    recall->add_option("--dataset", recall_opts->dataset, "COCO annotation file")
        ->required();
    recall->add_option("--anchor-config", recall_opts->anchor_config,
                       "Anchor configuration JSON")
        ->required();
    recall->add_option("--iou", recall_opts->iou, "IoU threshold for coverage");
    recall->add_option("--out", recall_opts->out, "Output directory (optional)");
    recall->callback([&action, recall_opts] {
        action = [recall_opts] { return run_anchor_recall(*recall_opts); };
    });

    auto eval_opts = std::make_shared<EvaluateOpts>();
    auto* evaluate = app.add_subcommand("evaluate",
                                        "COCO-style evaluation of detection files");
    evaluate->add_option("--dataset", eval_opts->dataset, "COCO annotation file")
        ->required();
    evaluate->add_option("--split", eval_opts->split_file,
                         "Split file; evaluation runs on the test side");
    evaluate
        ->add_option("--detections", eval_opts->detections, "Detection results file")
        ->required();
    evaluate->add_option("--compare", eval_opts->compare,
                         "Additional detection files to compare against");
    evaluate->add_option("--name", eval_opts->names, "Run name per detection file");
    evaluate->add_option("--dataset-name", eval_opts->dataset_name,
                         "Data Set column value");
    evaluate->add_option("--backbone", eval_opts->backbone, "Backbone column value");
    evaluate->add_option("--iou-thresholds", eval_opts->iou_thresholds,
                         "Override the default 0.50:0.05:0.95 thresholds");
    evaluate->add_option("--max-dets", eval_opts->max_dets,
                         "Detections kept per image and class");
    evaluate->add_option("--out", eval_opts->out, "Output directory")->required();
    evaluate->callback([&action, eval_opts] {
        action = [eval_opts] { return run_evaluate(*eval_opts); };
    });

    auto report_opts = std::make_shared<ReportOpts>();
    auto* report = app.add_subcommand("report",
                                      "Combine stored evaluation reports into tables");
    report->add_option("--report", report_opts->reports, "Evaluation report JSON")
        ->required();
    report->add_option("--name", report_opts->names, "Row name per report");
    report->add_option("--out", report_opts->out, "Output directory")->required();
    report->callback([&action, report_opts] {
        action = [report_opts] { return run_report(*report_opts); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return action ? action() : 2;
    } catch (const slld::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const slld::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const slld::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
