#include <catch2/catch_amalgamated.hpp>

#include <slld/evaluator.hpp>
#include <slld/reporting.hpp>

#include "support/fixtures.hpp"
#include "support/xml_check.hpp"

using slld::BarTable;
using slld::ChartSpec;
using slld::EvalReport;

namespace {

EvalReport sample_report() {
    EvalReport rep;
    rep.detector = "faster-rcnn";
    rep.backbone = "resnet-101";
    rep.dataset_name = "merged";
    rep.map = 67.890123;
    rep.ap50 = 90.128;
    rep.ap75 = 70.0;
    rep.ap_small = std::nullopt;
    rep.ap_medium = 55.5;
    rep.ap_large = 71.23456;
    rep.ar = 75.0;
    rep.per_class = {{"body", 95.0, 80.0, 85.0}, {"figure", std::nullopt, std::nullopt, std::nullopt}};
    return rep;
}

} // namespace

TEST_CASE("metric table columns are fixed and ordered", "[reporting]") {
    auto out = slld::render_metric_table({{"run-a", sample_report()}});
    CHECK(out.csv.rfind("Detector,Backbone,Data Set,mAP,AP50,AP75,APs,APm,APl,AR\n", 0) == 0);
    CHECK(out.markdown.rfind(
              "| Detector | Backbone | Data Set | mAP | AP50 | AP75 | APs | APm | APl | AR |\n",
              0) == 0);
    // Second markdown line is the alignment rule.
    auto second = out.markdown.substr(out.markdown.find('\n') + 1);
    CHECK(second.rfind("| --- | --- | --- | --- | --- | --- | --- | --- | --- | --- |\n", 0) == 0);
}

TEST_CASE("metric cells use two decimals and dash out undefined values", "[reporting]") {
    auto out = slld::render_metric_table({{"", sample_report()}});
    // Name falls back to the report's detector field.
    CHECK(out.csv.find("faster-rcnn,resnet-101,merged,67.89,") != std::string::npos);
    CHECK(out.csv.find(",90.13,70.00,-,55.50,71.23,75.00\n") != std::string::npos);
    CHECK(out.markdown.find("| faster-rcnn | resnet-101 | merged | 67.89 |") !=
          std::string::npos);
    CHECK(out.markdown.find("| - |") != std::string::npos);

    EvalReport anon = sample_report();
    anon.dataset_name.clear();
    auto out2 = slld::render_metric_table({{"named", anon}});
    CHECK(out2.csv.find("named,resnet-101,-,") != std::string::npos);
}

TEST_CASE("metric table output is identical across renders", "[reporting]") {
    std::vector<std::pair<std::string, EvalReport>> rows{{"a", sample_report()},
                                                         {"b", sample_report()}};
    auto first = slld::render_metric_table(rows);
    auto second = slld::render_metric_table(rows);
    CHECK(first.markdown == second.markdown);
    CHECK(first.csv == second.csv);
}

TEST_CASE("comparison grid serializes labels by runs", "[reporting]") {
    slld::ComparisonTable t;
    t.run_names = {"ours", "baseline"};
    t.labels = {"body", "figure"};
    t.cells = {{80.0, 75.5}, {std::nullopt, 60.128}};
    std::string csv = slld::comparison_to_csv(t);
    CHECK(csv ==
          "label,ours,baseline\n"
          "body,80.00,75.50\n"
          "figure,-,60.13\n");
}

TEST_CASE("histogram counts conserve the sample and pin the range", "[reporting]") {
    std::vector<double> values{0.1, 0.2, 0.35, 0.5, 1.0, 3.9};
    slld::Histogram h = slld::histogram_counts(values, 4);
    CHECK(h.lo == 0.1);
    CHECK(h.hi == 3.9);
    std::size_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == values.size());
    // Max lands in the last bin (closed upper edge).
    CHECK(h.counts.back() >= 1);
    CHECK(h.bin_width() == Catch::Approx((3.9 - 0.1) / 4.0));
}

TEST_CASE("histogram of identical values synthesizes a unit span", "[reporting]") {
    slld::Histogram h = slld::histogram_counts({2.0, 2.0, 2.0}, 3);
    CHECK(h.lo == 1.5);
    CHECK(h.hi == 2.5);
    std::size_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == 3);
}

TEST_CASE("histogram rejects empty input and zero bins", "[reporting]") {
    CHECK_THROWS_AS(slld::histogram_counts({}, 4), slld::InvalidArgumentError);
    CHECK_THROWS_AS(slld::histogram_counts({1.0}, 0), slld::InvalidArgumentError);
}

TEST_CASE("histogram svg is well-formed and labelled", "[reporting]") {
    ChartSpec spec;
    spec.title = "Aspect ratios";
    spec.x_label = "w/h";
    spec.y_label = "count";
    std::vector<double> values;
    std::mt19937_64 rng(808);
    for (int i = 0; i < 300; ++i) values.push_back(slld::uniform_real(rng, 0.1, 4.0));

    std::string svg = slld::render_histogram(values, 20, spec);
    auto ok = testsupport::check_xml(svg);
    INFO(ok.error);
    CHECK(ok.ok);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("Aspect ratios") != std::string::npos);
    CHECK(svg.find("w/h") != std::string::npos);
    CHECK(svg.find("count") != std::string::npos);

    // Deterministic output for identical input.
    CHECK(svg == slld::render_histogram(values, 20, spec));
}

TEST_CASE("grouped bars svg marks gaps and stays well-formed", "[reporting]") {
    BarTable table;
    table.categories = {"body", "figure", "caption"};
    table.series = {"ours", "baseline"};
    table.values = {{80.0, 75.0}, {60.0, std::nullopt}, {std::nullopt, 45.0}};

    ChartSpec spec;
    spec.kind = ChartSpec::Kind::grouped_bars;
    spec.title = "AP50 by label";
    spec.series_names = table.series;

    std::string svg = slld::render_grouped_bars(table, spec);
    auto ok = testsupport::check_xml(svg);
    INFO(ok.error);
    CHECK(ok.ok);
    CHECK(svg.find("AP50 by label") != std::string::npos);
    CHECK(svg.find("ours") != std::string::npos);
    CHECK(svg.find("baseline") != std::string::npos);
    // Undefined cells leave an "x" marker rather than a bar.
    CHECK(svg.find(">x<") != std::string::npos);
    CHECK(svg == slld::render_grouped_bars(table, spec));
}

TEST_CASE("grouped bars reject ragged grids", "[reporting]") {
    BarTable table;
    table.categories = {"a", "b"};
    table.series = {"s"};
    table.values = {{1.0}};
    ChartSpec spec;
    CHECK_THROWS_AS(slld::render_grouped_bars(table, spec), slld::InvalidArgumentError);

    table.values = {{1.0}, {1.0, 2.0}};
    CHECK_THROWS_AS(slld::render_grouped_bars(table, spec), slld::InvalidArgumentError);

    BarTable empty;
    CHECK_THROWS_AS(slld::render_grouped_bars(empty, spec), slld::InvalidArgumentError);
}

TEST_CASE("svg text escapes markup characters", "[reporting]") {
    ChartSpec spec;
    spec.title = "a < b & \"c\" > d";
    std::string svg = slld::render_histogram({1.0, 2.0, 3.0}, 3, spec);
    auto ok = testsupport::check_xml(svg);
    INFO(ok.error);
    CHECK(ok.ok);
    CHECK(svg.find("a &lt; b &amp; &quot;c&quot; &gt; d") != std::string::npos);
    CHECK(svg.find("a < b") == std::string::npos);
}
