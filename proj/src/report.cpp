#include "llbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "llbench/csv.hpp"

namespace llb {

namespace fs = std::filesystem;

namespace {

std::string fmt_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

BdTable bd_table(const BenchmarkResult& result, const std::vector<std::string>& metrics,
                 const std::vector<std::string>& workflows, BdMethod method, int min_points) {
    BdTable table;
    table.method = method;

    std::set<std::string> seq_set;
    for (const auto& [key, curve] : result.curves) seq_set.insert(key.sequence_id);
    table.sequences.assign(seq_set.begin(), seq_set.end());
    if (table.sequences.empty()) throw DataError("result set has no curves");

    for (const std::string& metric : metrics) {
        for (const std::string& workflow : workflows) {
            if (workflow == "anchor") continue;
            BdTable::Row row;
            row.metric_id = metric;
            row.workflow = workflow;
            double sum = 0.0;
            int populated = 0;
            for (const std::string& seq : table.sequences) {
                const auto anchor_it = result.curves.find(CurveKey{seq, "anchor", metric});
                if (anchor_it == result.curves.end())
                    throw DataError("no anchor curve for " + seq + "/" + metric);
                const auto test_it = result.curves.find(CurveKey{seq, workflow, metric});
                if (test_it == result.curves.end()) {
                    row.cells.emplace_back(std::nullopt);
                    table.footnotes.push_back(seq + "/" + metric + "/" + workflow +
                                              ": no curve (failed cells)");
                    continue;
                }
                try {
                    const BdResult bd =
                        bd_rate(anchor_it->second, test_it->second, method, min_points);
                    row.cells.emplace_back(bd.bd_rate_pct);
                    sum += bd.bd_rate_pct;
                    ++populated;
                } catch (const Error& e) {
                    row.cells.emplace_back(std::nullopt);
                    table.footnotes.push_back(seq + "/" + metric + "/" + workflow + ": " +
                                              e.what());
                }
            }
            if (populated > 0) row.average = sum / populated;
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::string render_bd_table_text(const BdTable& table) {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> head = {"metric", "method"};
    head.insert(head.end(), table.sequences.begin(), table.sequences.end());
    head.push_back("avg");
    grid.push_back(head);
    for (const auto& row : table.rows) {
        std::vector<std::string> r = {row.metric_id, row.workflow};
        for (const auto& cell : row.cells)
            r.push_back(cell ? fmt_fixed(*cell, 2) + "%" : "-");
        r.push_back(row.average ? fmt_fixed(*row.average, 2) + "%" : "-");
        grid.push_back(std::move(r));
    }
    std::vector<std::size_t> widths(grid[0].size(), 0);
    for (const auto& r : grid)
        for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], r[c].size());
    std::ostringstream out;
    out << "BD-Rate vs anchor (" << bd_method_name(table.method)
        << "); negative = bitrate saving\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t c = 0; c < grid[i].size(); ++c) {
            out << (c == 0 ? "" : "  ");
            const std::string& cell = grid[i][c];
            out << cell << std::string(widths[c] - cell.size(), ' ');
        }
        out << "\n";
        if (i == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < widths.size(); ++c) total += widths[c] + (c ? 2 : 0);
            out << std::string(total, '-') << "\n";
        }
    }
    for (const std::string& note : table.footnotes) out << "note: " << note << "\n";
    return out.str();
}

std::string render_bd_table_csv(const BdTable& table) {
    std::ostringstream out;
    out << "metric,workflow";
    for (const std::string& seq : table.sequences) out << "," << seq;
    out << ",avg\n";
    for (const auto& row : table.rows) {
        out << row.metric_id << "," << row.workflow;
        for (const auto& cell : row.cells) out << "," << (cell ? fmt_full(*cell) : "");
        out << "," << (row.average ? fmt_full(*row.average) : "") << "\n";
    }
    return out.str();
}

std::string render_bd_table_json(const BdTable& table) {
    nlohmann::ordered_json j;
    j["method"] = bd_method_name(table.method);
    j["sequences"] = table.sequences;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        nlohmann::ordered_json r;
        r["metric"] = row.metric_id;
        r["workflow"] = row.workflow;
        nlohmann::ordered_json cells = nlohmann::ordered_json::array();
        for (const auto& cell : row.cells) {
            if (cell)
                cells.push_back(*cell);
            else
                cells.push_back(nullptr);
        }
        r["cells"] = cells;
        if (row.average)
            r["avg"] = *row.average;
        else
            r["avg"] = nullptr;
        j["rows"].push_back(r);
    }
    j["footnotes"] = table.footnotes;
    return j.dump(2) + "\n";
}

std::string curves_to_csv(const BenchmarkResult& result) {
    if (result.curves.empty()) throw DataError("no curves to export");
    std::ostringstream out;
    out << "sequence_id,label,metric,rate_kbps,quality\n";
    for (const auto& [key, curve] : result.curves)
        for (const RQPoint& p : curve.points)
            out << key.sequence_id << "," << key.workflow << "," << key.metric_id << ","
                << fmt_full(p.rate_kbps) << "," << fmt_full(p.quality) << "\n";
    return out.str();
}

void export_curves_csv(const BenchmarkResult& result, const fs::path& path) {
    write_text_file(path, curves_to_csv(result));
}

std::string curves_to_json(const BenchmarkResult& result) {
    if (result.curves.empty()) throw DataError("no curves to export");
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& [key, curve] : result.curves) {
        nlohmann::ordered_json c;
        c["sequence"] = key.sequence_id;
        c["label"] = key.workflow;
        c["metric"] = key.metric_id;
        c["points"] = nlohmann::ordered_json::array();
        for (const RQPoint& p : curve.points)
            c["points"].push_back({{"rate_kbps", p.rate_kbps}, {"quality", p.quality}});
        j.push_back(c);
    }
    return j.dump(2) + "\n";
}

void export_curves_json(const BenchmarkResult& result, const fs::path& path) {
    write_text_file(path, curves_to_json(result));
}

std::vector<LabeledCurve> load_curves_csv(const fs::path& path) {
    const CsvTable table = read_csv(path);
    const std::string context = "curves " + path.string();
    const int col_label = table.require_column("label", context);
    const int col_metric = table.require_column("metric", context);
    const int col_rate = table.require_column("rate_kbps", context);
    const int col_quality = table.require_column("quality", context);
    const int col_seq = table.column("sequence_id");

    std::map<std::tuple<std::string, std::string, std::string>, RQCurve> curves;
    for (const auto& row : table.rows) {
        if (row.size() < table.header.size())
            throw FormatError(context + ": short row");
        const std::string seq = col_seq >= 0 ? row[static_cast<std::size_t>(col_seq)] : "";
        const std::string label = row[static_cast<std::size_t>(col_label)];
        const std::string metric = row[static_cast<std::size_t>(col_metric)];
        RQCurve& curve = curves[{seq, label, metric}];
        curve.label = label;
        curve.metric_id = metric;
        curve.points.push_back(RQPoint{std::stod(row[static_cast<std::size_t>(col_rate)]),
                                       std::stod(row[static_cast<std::size_t>(col_quality)])});
    }
    std::vector<LabeledCurve> out;
    for (auto& [key, curve] : curves) {
        std::sort(curve.points.begin(), curve.points.end(),
                  [](const RQPoint& a, const RQPoint& b) { return a.rate_kbps < b.rate_kbps; });
        out.push_back(LabeledCurve{std::get<0>(key), std::move(curve)});
    }
    return out;
}

namespace {

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                               "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

SvgPlot plot_svg(const std::vector<PlotSeries>& series, const PlotOptions& options) {
    if (series.empty()) throw DataError("nothing to plot");
    for (const PlotSeries& s : series)
        if (s.points.empty()) throw DataError("series '" + s.label + "' has no points");

    SvgPlot plot;
    bool first = true;
    for (const PlotSeries& s : series) {
        for (const auto& [x, y] : s.points) {
            if (options.log_x && !(x > 0.0))
                throw DataError("log-axis plot needs positive x values");
            const double px = options.log_x ? std::log10(x) : x;
            if (first) {
                plot.x_min = plot.x_max = px;
                plot.y_min = plot.y_max = y;
                first = false;
            } else {
                plot.x_min = std::min(plot.x_min, px);
                plot.x_max = std::max(plot.x_max, px);
                plot.y_min = std::min(plot.y_min, y);
                plot.y_max = std::max(plot.y_max, y);
            }
        }
    }
    // Pad degenerate ranges so single points still land inside the frame.
    if (plot.x_max - plot.x_min < 1e-12) {
        plot.x_min -= 0.5;
        plot.x_max += 0.5;
    }
    if (plot.y_max - plot.y_min < 1e-12) {
        plot.y_min -= 0.5;
        plot.y_max += 0.5;
    }

    const double margin_left = 70.0;
    const double margin_right = 160.0;
    const double margin_top = options.title.empty() ? 20.0 : 44.0;
    const double margin_bottom = 52.0;
    const double plot_w = options.width - margin_left - margin_right;
    const double plot_h = options.height - margin_top - margin_bottom;
    auto map_x = [&](double x) {
        const double px = options.log_x ? std::log10(x) : x;
        return margin_left + (px - plot.x_min) / (plot.x_max - plot.x_min) * plot_w;
    };
    auto map_y = [&](double y) {
        return margin_top + (plot.y_max - y) / (plot.y_max - plot.y_min) * plot_h;
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width
        << "\" height=\"" << options.height << "\" viewBox=\"0 0 " << options.width << " "
        << options.height << "\">\n";
    svg << "  <rect width=\"" << options.width << "\" height=\"" << options.height
        << "\" fill=\"white\"/>\n";
    if (!options.title.empty())
        svg << "  <text x=\"" << fmt_fixed(margin_left + plot_w / 2, 1)
            << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
            << xml_escape(options.title) << "</text>\n";
    svg << "  <rect x=\"" << fmt_fixed(margin_left, 1) << "\" y=\"" << fmt_fixed(margin_top, 1)
        << "\" width=\"" << fmt_fixed(plot_w, 1) << "\" height=\"" << fmt_fixed(plot_h, 1)
        << "\" fill=\"none\" stroke=\"#444444\"/>\n";

    // Axis ticks: 5 even divisions of the plotted range.
    svg << "  <g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = plot.x_min + (plot.x_max - plot.x_min) * i / 5.0;
        const double value = options.log_x ? std::pow(10.0, fx) : fx;
        const double px = margin_left + plot_w * i / 5.0;
        svg << "    <line x1=\"" << fmt_fixed(px, 1) << "\" y1=\""
            << fmt_fixed(margin_top + plot_h, 1) << "\" x2=\"" << fmt_fixed(px, 1) << "\" y2=\""
            << fmt_fixed(margin_top + plot_h + 5, 1) << "\" stroke=\"#444444\"/>\n";
        svg << "    <text x=\"" << fmt_fixed(px, 1) << "\" y=\""
            << fmt_fixed(margin_top + plot_h + 18, 1) << "\" text-anchor=\"middle\">"
            << fmt_fixed(value, value < 10 ? 2 : 1) << "</text>\n";
        const double fy = plot.y_min + (plot.y_max - plot.y_min) * i / 5.0;
        const double py = map_y(fy);
        svg << "    <line x1=\"" << fmt_fixed(margin_left - 5, 1) << "\" y1=\"" << fmt_fixed(py, 1)
            << "\" x2=\"" << fmt_fixed(margin_left, 1) << "\" y2=\"" << fmt_fixed(py, 1)
            << "\" stroke=\"#444444\"/>\n";
        svg << "    <text x=\"" << fmt_fixed(margin_left - 8, 1) << "\" y=\""
            << fmt_fixed(py + 4, 1) << "\" text-anchor=\"end\">" << fmt_fixed(fy, 2)
            << "</text>\n";
    }
    svg << "    <text x=\"" << fmt_fixed(margin_left + plot_w / 2, 1) << "\" y=\""
        << fmt_fixed(static_cast<double>(options.height) - 12, 1)
        << "\" text-anchor=\"middle\">" << xml_escape(options.x_label) << "</text>\n";
    svg << "    <text x=\"16\" y=\"" << fmt_fixed(margin_top + plot_h / 2, 1)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << fmt_fixed(margin_top + plot_h / 2, 1) << ")\">" << xml_escape(options.y_label)
        << "</text>\n";
    svg << "  </g>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kSeriesColors[s % (sizeof(kSeriesColors) / sizeof(char*))];
        if (series[s].points.size() > 1) {
            svg << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
            for (const auto& [x, y] : series[s].points)
                svg << fmt_fixed(map_x(x), 2) << "," << fmt_fixed(map_y(y), 2) << " ";
            svg << "\"/>\n";
        }
        for (const auto& [x, y] : series[s].points)
            svg << "  <circle cx=\"" << fmt_fixed(map_x(x), 2) << "\" cy=\""
                << fmt_fixed(map_y(y), 2) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }

    // Legend.
    svg << "  <g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kSeriesColors[s % (sizeof(kSeriesColors) / sizeof(char*))];
        const double ly = margin_top + 14.0 + 18.0 * static_cast<double>(s);
        const double lx = static_cast<double>(options.width) - margin_right + 12.0;
        svg << "    <line x1=\"" << fmt_fixed(lx, 1) << "\" y1=\"" << fmt_fixed(ly - 4, 1)
            << "\" x2=\"" << fmt_fixed(lx + 22, 1) << "\" y2=\"" << fmt_fixed(ly - 4, 1)
            << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
        svg << "    <text x=\"" << fmt_fixed(lx + 28, 1) << "\" y=\"" << fmt_fixed(ly, 1) << "\">"
            << xml_escape(series[s].label) << "</text>\n";
    }
    svg << "  </g>\n</svg>\n";
    plot.svg = svg.str();
    return plot;
}

std::vector<PlotSeries> curves_as_series(const BenchmarkResult& result, const std::string& metric,
                                         const std::string& sequence_id) {
    std::vector<PlotSeries> series;
    for (const auto& [key, curve] : result.curves) {
        if (key.metric_id != metric || key.sequence_id != sequence_id) continue;
        PlotSeries s;
        s.label = key.workflow;
        for (const RQPoint& p : curve.points) s.points.emplace_back(p.rate_kbps, p.quality);
        series.push_back(std::move(s));
    }
    return series;
}

std::string noise_profile_csv(const NoiseProfile& profile) {
    std::ostringstream out;
    out << "probe,frame,raw,smoothed\n";
    for (std::size_t p = 0; p < profile.probes.size(); ++p)
        for (std::size_t t = 0; t < profile.series[p].size(); ++t)
            out << profile.probes[p].label << "," << t << "," << fmt_full(profile.series[p][t])
                << "," << fmt_full(profile.smoothed[p][t]) << "\n";
    return out.str();
}

std::string noise_profile_summary_csv(const NoiseProfile& profile) {
    std::ostringstream out;
    out << "probe,x,y,mae\n";
    for (std::size_t p = 0; p < profile.probes.size(); ++p)
        out << profile.probes[p].label << "," << profile.probes[p].x << "," << profile.probes[p].y
            << "," << fmt_full(profile.mae[p]) << "\n";
    return out.str();
}

SvgPlot noise_profile_svg(const NoiseProfile& profile) {
    std::vector<PlotSeries> series;
    for (std::size_t p = 0; p < profile.probes.size(); ++p) {
        PlotSeries s;
        s.label = profile.probes[p].label;
        for (std::size_t t = 0; t < profile.series[p].size(); ++t)
            s.points.emplace_back(static_cast<double>(t), profile.series[p][t]);
        series.push_back(std::move(s));
    }
    PlotOptions options;
    options.title = "Temporal intensity profile";
    options.x_label = "frame";
    options.y_label = "normalized intensity";
    options.log_x = false;
    return plot_svg(series, options);
}

std::string scores_to_csv(const std::vector<SequenceScore>& scores) {
    std::ostringstream out;
    out << "frame,metric,plane,value\n";
    for (const SequenceScore& score : scores) {
        for (const FrameScore& f : score.per_frame)
            out << f.frame_index << "," << score.metric_id << "," << score.plane << ","
                << fmt_full(f.value) << "\n";
        out << "pooled," << score.metric_id << "," << score.plane << "," << fmt_full(score.pooled)
            << "\n";
    }
    return out.str();
}

std::string scores_to_json(const std::vector<SequenceScore>& scores) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const SequenceScore& score : scores) {
        nlohmann::ordered_json s;
        s["metric"] = score.metric_id;
        s["plane"] = score.plane;
        s["pooling"] = pooling_name(score.pooling);
        s["pooled"] = score.pooled;
        nlohmann::ordered_json values = nlohmann::ordered_json::array();
        for (const FrameScore& f : score.per_frame) values.push_back(f.value);
        s["per_frame"] = values;
        j.push_back(s);
    }
    return j.dump(2) + "\n";
}

}  // namespace llb
