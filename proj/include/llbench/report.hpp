#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "llbench/bd_metric.hpp"
#include "llbench/pipeline.hpp"

namespace llb {

// Table-2-style BD-Rate grid: one row per (metric, workflow) pair, one
// column per sequence plus the average of the populated cells.
struct BdTable {
    struct Row {
        std::string metric_id;
        std::string workflow;
        std::vector<std::optional<double>> cells;  // bd_rate_pct, blank on failure
        std::optional<double> average;
    };
    std::vector<std::string> sequences;
    std::vector<Row> rows;
    std::vector<std::string> footnotes;  // per-cell BD failures
    BdMethod method = BdMethod::CubicFit;
};

// Every workflow is compared against the anchor curves; a missing anchor
// is an error, per-cell BD failures become blank cells with footnotes.
BdTable bd_table(const BenchmarkResult& result, const std::vector<std::string>& metrics,
                 const std::vector<std::string>& workflows, BdMethod method = BdMethod::CubicFit,
                 int min_points = 4);

std::string render_bd_table_text(const BdTable& table);  // aligned, 2 decimals
std::string render_bd_table_csv(const BdTable& table);
std::string render_bd_table_json(const BdTable& table);

// Rate-quality curve export, one row per point, byte-deterministic
// (17 significant digits, fixed ordering).
std::string curves_to_csv(const BenchmarkResult& result);
void export_curves_csv(const BenchmarkResult& result, const std::filesystem::path& path);
std::string curves_to_json(const BenchmarkResult& result);
void export_curves_json(const BenchmarkResult& result, const std::filesystem::path& path);

// Reads curves back from the CSV format written above (also the ingest
// format for the bd subcommand: label, metric, rate_kbps, quality).
struct LabeledCurve {
    std::string sequence_id;  // empty when the CSV has no sequence column
    RQCurve curve;
};
std::vector<LabeledCurve> load_curves_csv(const std::filesystem::path& path);

// Generic series plotting; used for rate-quality curves (log-x) and noise
// profile time series (linear-x).
struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct PlotOptions {
    std::string title;
    std::string x_label = "rate [kbps]";
    std::string y_label = "quality";
    bool log_x = true;
    int width = 860;
    int height = 520;
};

struct SvgPlot {
    std::string svg;
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
};

SvgPlot plot_svg(const std::vector<PlotSeries>& series, const PlotOptions& options = {});

std::vector<PlotSeries> curves_as_series(const BenchmarkResult& result, const std::string& metric,
                                         const std::string& sequence_id);

// NoiseProfile exports: raw/smoothed series CSV, per-probe MAE summary
// CSV, and a time-series SVG.
std::string noise_profile_csv(const NoiseProfile& profile);
std::string noise_profile_summary_csv(const NoiseProfile& profile);
SvgPlot noise_profile_svg(const NoiseProfile& profile);

// Per-frame and pooled score exports (columns: frame, metric, plane, value).
std::string scores_to_csv(const std::vector<SequenceScore>& scores);
std::string scores_to_json(const std::vector<SequenceScore>& scores);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace llb
