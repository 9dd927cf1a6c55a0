#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "slld/errors.hpp"
#include "slld/evaluator.hpp"

namespace slld {

/// Chart parameters. Layout is fully fixed by these fields, so rendering the
/// same inputs twice produces byte-identical documents.
struct ChartSpec {
    enum class Kind { histogram, grouped_bars };

    Kind kind = Kind::histogram;
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> series_names; ///< legend entries for grouped bars
    int width = 640;
    int height = 400;
    std::vector<std::string> palette{"#4878b0", "#d65f5f", "#6aa56a", "#b07aa8",
                                     "#c9a252", "#77b4c8"};
};

/// Category-by-series value grid for grouped bars; absent values mark N/A.
struct BarTable {
    std::vector<std::string> categories;
    std::vector<std::string> series;
    std::vector<std::vector<std::optional<double>>> values; ///< [category][series]
};

namespace detail {

inline std::string fmt(double v, int decimals = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

/// Short numeric label: trims trailing zeros of a 3-decimal rendering.
inline std::string fmt_tick(double v) {
    std::string s = fmt(v, 3);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s.empty() ? "0" : s;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Minimal SVG 1.1 assembler with a fixed-metrics text model (10 px font,
/// 6 px per character) so no font measurement enters the layout.
class SvgBuilder {
public:
    SvgBuilder(int width, int height) : width_(width), height_(height) {
        body_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
                 std::to_string(width) + "\" height=\"" + std::to_string(height) +
                 "\" viewBox=\"0 0 " + std::to_string(width) + " " +
                 std::to_string(height) + "\">\n";
        body_ += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) +
                 "\" height=\"" + std::to_string(height) + "\" fill=\"#ffffff\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill) {
        body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) +
                 "\" height=\"" + fmt(h) + "\" fill=\"" + fill + "\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2) {
        body_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) +
                 "\" y2=\"" + fmt(y2) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    }

    enum class Align { start, middle, end };

    void text(double x, double y, const std::string& s, Align align = Align::start,
              int size = 10, const std::string& extra = "") {
        const char* anchor = align == Align::start ? "start"
                             : align == Align::middle ? "middle" : "end";
        body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-family=\"monospace\"" +
                 " font-size=\"" + std::to_string(size) + "\" text-anchor=\"" + anchor +
                 "\"" + extra + ">" + xml_escape(s) + "</text>\n";
    }

    std::string finish() {
        return body_ + "</svg>\n";
    }

    int width() const { return width_; }
    int height() const { return height_; }

private:
    int width_;
    int height_;
    std::string body_;
};

struct PlotFrame {
    double left, right, top, bottom; ///< pixel edges of the data area
};

inline PlotFrame standard_frame(const ChartSpec& spec) {
    return {55.0, spec.width - 15.0, 35.0, spec.height - 45.0};
}

inline void draw_frame(SvgBuilder& svg, const PlotFrame& f, const ChartSpec& spec,
                       double y_max) {
    svg.text(svg.width() / 2.0, 20.0, spec.title, SvgBuilder::Align::middle, 13);
    svg.line(f.left, f.bottom, f.right, f.bottom);
    svg.line(f.left, f.top, f.left, f.bottom);
    if (!spec.x_label.empty())
        svg.text((f.left + f.right) / 2.0, svg.height() - 8.0, spec.x_label,
                 SvgBuilder::Align::middle);
    if (!spec.y_label.empty())
        svg.text(14.0, (f.top + f.bottom) / 2.0, spec.y_label, SvgBuilder::Align::middle,
                 10,
                 " transform=\"rotate(-90 14 " + fmt((f.top + f.bottom) / 2.0) + ")\"");
    // Four y ticks between 0 and the maximum.
    for (int i = 0; i <= 4; ++i) {
        double v = y_max * i / 4.0;
        double y = f.bottom - (f.bottom - f.top) * i / 4.0;
        svg.line(f.left - 3.0, y, f.left, y);
        svg.text(f.left - 6.0, y + 3.5, fmt_tick(v), SvgBuilder::Align::end, 9);
    }
}

} // namespace detail

/// Equal-width binning over [min, max] of the data (a unit span centered on
/// the value when all inputs coincide). The last bin is closed so the maximum
/// lands inside it; counts always sum to |values|.
struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;

    double bin_width() const {
        return (hi - lo) / static_cast<double>(counts.size());
    }
};

inline Histogram histogram_counts(const std::vector<double>& values, int bins) {
    if (values.empty()) throw InvalidArgumentError("histogram: no values");
    if (bins < 1) throw InvalidArgumentError("histogram: bins must be >= 1");

    Histogram h;
    h.lo = *std::min_element(values.begin(), values.end());
    h.hi = *std::max_element(values.begin(), values.end());
    if (h.lo == h.hi) {
        h.lo -= 0.5;
        h.hi += 0.5;
    }
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    double width = h.bin_width();
    for (double v : values) {
        auto b = static_cast<long>((v - h.lo) / width);
        b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

inline std::string render_histogram(const std::vector<double>& values, int bins,
                                    const ChartSpec& spec) {
    Histogram h = histogram_counts(values, bins);
    const double lo = h.lo;
    const double width = h.bin_width();
    const auto& counts = h.counts;
    std::size_t peak = *std::max_element(counts.begin(), counts.end());
    double y_max = peak > 0 ? static_cast<double>(peak) : 1.0;

    detail::SvgBuilder svg(spec.width, spec.height);
    auto f = detail::standard_frame(spec);
    detail::draw_frame(svg, f, spec, y_max);

    double span = f.right - f.left;
    const std::string& color = spec.palette.empty() ? "#4878b0" : spec.palette[0];
    for (int b = 0; b < bins; ++b) {
        auto c = static_cast<double>(counts[static_cast<std::size_t>(b)]);
        double x = f.left + span * b / bins;
        double bar_w = span / bins;
        double bar_h = (f.bottom - f.top) * c / y_max;
        if (c > 0) svg.rect(x + 0.5, f.bottom - bar_h, bar_w - 1.0, bar_h, color);
    }
    // x ticks: bin edges, thinned to at most 9 labels.
    int step = std::max(1, bins / 8);
    for (int b = 0; b <= bins; b += step) {
        double x = f.left + span * b / bins;
        svg.line(x, f.bottom, x, f.bottom + 3.0);
        svg.text(x, f.bottom + 14.0, detail::fmt_tick(lo + width * b),
                 detail::SvgBuilder::Align::middle, 9);
    }
    return svg.finish();
}

/// Grouped bar chart: one group per category, one bar per series. N/A cells
/// leave a gap with an x marker at the baseline. The grid must be
/// rectangular.
inline std::string render_grouped_bars(const BarTable& table, const ChartSpec& spec) {
    if (table.categories.empty() || table.series.empty())
        throw InvalidArgumentError("render_grouped_bars: empty grid");
    if (table.values.size() != table.categories.size())
        throw InvalidArgumentError("render_grouped_bars: ragged grid (rows)");
    for (const auto& row : table.values)
        if (row.size() != table.series.size())
            throw InvalidArgumentError("render_grouped_bars: ragged grid (columns)");

    double y_max = 0.0;
    for (const auto& row : table.values)
        for (const auto& cell : row)
            if (cell) y_max = std::max(y_max, *cell);
    if (y_max <= 0.0) y_max = 1.0;

    detail::SvgBuilder svg(spec.width, spec.height);
    auto f = detail::standard_frame(spec);
    detail::draw_frame(svg, f, spec, y_max);

    const std::size_t C = table.categories.size();
    const std::size_t S = table.series.size();
    double group_w = (f.right - f.left) / static_cast<double>(C);
    double bar_w = group_w * 0.8 / static_cast<double>(S);

    for (std::size_t c = 0; c < C; ++c) {
        double gx = f.left + group_w * static_cast<double>(c);
        for (std::size_t s = 0; s < S; ++s) {
            double x = gx + group_w * 0.1 + bar_w * static_cast<double>(s);
            const auto& cell = table.values[c][s];
            const std::string& color = spec.palette[s % spec.palette.size()];
            if (cell) {
                double bar_h = (f.bottom - f.top) * (*cell) / y_max;
                svg.rect(x, f.bottom - bar_h, bar_w - 1.0, bar_h, color);
            } else {
                svg.text(x + bar_w / 2.0, f.bottom - 3.0, "x",
                         detail::SvgBuilder::Align::middle, 9);
            }
        }
        svg.text(gx + group_w / 2.0, f.bottom + 14.0, table.categories[c],
                 detail::SvgBuilder::Align::middle, 9);
    }

    // Legend, top-right, one swatch per series.
    double ly = f.top + 4.0;
    for (std::size_t s = 0; s < S; ++s) {
        double lx = f.right - 110.0;
        svg.rect(lx, ly - 8.0, 10.0, 10.0, spec.palette[s % spec.palette.size()]);
        svg.text(lx + 14.0, ly, table.series[s], detail::SvgBuilder::Align::start, 9);
        ly += 14.0;
    }
    return svg.finish();
}

/// Markdown and CSV renderings of the headline metric table.
struct MetricTableText {
    std::string markdown;
    std::string csv;
};

/// Column order is fixed: Detector, Backbone, Data Set, mAP, AP50, AP75,
/// APs, APm, APl, AR. Percentages carry two decimals; N/A renders as "-".
inline MetricTableText render_metric_table(
    const std::vector<std::pair<std::string, EvalReport>>& rows) {
    static const char* headers[] = {"Detector", "Backbone", "Data Set", "mAP", "AP50",
                                    "AP75",     "APs",      "APm",      "APl", "AR"};
    auto cell = [](const std::optional<double>& v) -> std::string {
        return v ? detail::fmt(*v, 2) : "-";
    };

    std::vector<std::vector<std::string>> grid;
    for (const auto& [name, rep] : rows) {
        grid.push_back({name.empty() ? rep.detector : name, rep.backbone,
                        rep.dataset_name.empty() ? "-" : rep.dataset_name, cell(rep.map),
                        cell(rep.ap50), cell(rep.ap75), cell(rep.ap_small),
                        cell(rep.ap_medium), cell(rep.ap_large), cell(rep.ar)});
    }

    MetricTableText out;
    std::string md_header = "|", md_rule = "|";
    std::string csv_header;
    for (const char* h : headers) {
        md_header += std::string(" ") + h + " |";
        md_rule += " --- |";
        if (!csv_header.empty()) csv_header += ",";
        csv_header += h;
    }
    out.markdown = md_header + "\n" + md_rule + "\n";
    out.csv = csv_header + "\n";
    for (const auto& row : grid) {
        std::string md = "|", csv;
        for (const auto& c : row) {
            md += " " + c + " |";
            if (!csv.empty()) csv += ",";
            csv += c;
        }
        out.markdown += md + "\n";
        out.csv += csv + "\n";
    }
    return out;
}

/// Per-label AP50 comparison as CSV (rows = labels, columns = runs).
inline std::string comparison_to_csv(const ComparisonTable& table) {
    std::string csv = "label";
    for (const auto& name : table.run_names) csv += "," + name;
    csv += "\n";
    for (std::size_t row = 0; row < table.labels.size(); ++row) {
        csv += table.labels[row];
        for (const auto& cell : table.cells[row])
            csv += "," + (cell ? detail::fmt(*cell, 2) : std::string("-"));
        csv += "\n";
    }
    return csv;
}

} // namespace slld
