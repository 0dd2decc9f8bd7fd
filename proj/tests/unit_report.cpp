#include <doctest.h>

#include <cmath>

#include "llbench/report.hpp"
#include "support/temp_dir.hpp"

using namespace llb;
using namespace testsupport;

namespace {

RQCurve make_curve(const std::string& label, const std::string& metric, double rate_scale,
                   double quality_shift) {
    RQCurve c;
    c.label = label;
    c.metric_id = metric;
    const double rates[4] = {100, 180, 320, 560};
    const double qualities[4] = {30.0, 32.5, 34.8, 36.9};
    for (int i = 0; i < 4; ++i)
        c.points.push_back(RQPoint{rates[i] * rate_scale, qualities[i] + quality_shift});
    return c;
}

// Result set with the published-table shape: 6 sequences, 2 non-anchor
// workflows, configurable metrics.
BenchmarkResult synthetic_result(const std::vector<std::string>& metrics, int sequences = 6,
                                 bool identical_workflows = false) {
    BenchmarkResult result;
    for (int s = 0; s < sequences; ++s) {
        const std::string seq = "S" + std::to_string(s + 1);
        for (const std::string& metric : metrics) {
            const double scale = 1.0 + 0.05 * s;
            result.curves[CurveKey{seq, "anchor", metric}] = make_curve("anchor", metric, scale, 0);
            result.curves[CurveKey{seq, "pre", metric}] =
                identical_workflows ? make_curve("pre", metric, scale, 0)
                                    : make_curve("pre", metric, scale * 1.1, 0.2);
            result.curves[CurveKey{seq, "post", metric}] =
                identical_workflows ? make_curve("post", metric, scale, 0)
                                    : make_curve("post", metric, scale * 0.92, 0.1);
        }
    }
    return result;
}

}  // namespace

TEST_CASE("bd table is all zeros when workflows equal the anchor") {
    const BenchmarkResult result = synthetic_result({"psnr-y"}, 3, true);
    const BdTable table = bd_table(result, {"psnr-y"}, {"anchor", "pre", "post"});
    REQUIRE(table.rows.size() == 2);  // anchor is the reference, not a row
    for (const auto& row : table.rows) {
        for (const auto& cell : row.cells) {
            REQUIRE(cell.has_value());
            CHECK(std::abs(*cell) < 1e-9);
        }
        REQUIRE(row.average.has_value());
        CHECK(std::abs(*row.average) < 1e-9);
    }
}

TEST_CASE("bd table has the full grid shape and consistent averages") {
    const std::vector<std::string> metrics = {"psnr-y", "vmaf", "aqi", "piqe"};
    const BenchmarkResult result = synthetic_result(metrics);
    const BdTable table = bd_table(result, metrics, {"pre", "post"});
    CHECK(table.sequences.size() == 6);
    REQUIRE(table.rows.size() == 8);  // 4 metrics x 2 methods
    for (const auto& row : table.rows) {
        REQUIRE(row.cells.size() == 6);
        double sum = 0.0;
        int n = 0;
        for (const auto& cell : row.cells) {
            REQUIRE(cell.has_value());
            sum += *cell;
            ++n;
        }
        REQUIRE(row.average.has_value());
        CHECK(std::abs(*row.average - sum / n) < 1e-12);
    }
}

TEST_CASE("bd table requires the anchor and footnotes per-cell failures") {
    BenchmarkResult no_anchor = synthetic_result({"psnr-y"}, 2);
    no_anchor.curves.erase(CurveKey{"S1", "anchor", "psnr-y"});
    CHECK_THROWS_AS(bd_table(no_anchor, {"psnr-y"}, {"pre"}), DataError);

    // A 2-point test curve cannot be fitted: blank cell plus footnote.
    BenchmarkResult degraded = synthetic_result({"psnr-y"}, 2);
    degraded.curves[CurveKey{"S2", "pre", "psnr-y"}].points.resize(2);
    const BdTable table = bd_table(degraded, {"psnr-y"}, {"pre", "post"});
    int blanks = 0;
    for (const auto& row : table.rows)
        for (const auto& cell : row.cells)
            if (!cell.has_value()) ++blanks;
    CHECK(blanks == 1);
    CHECK(table.footnotes.size() == 1);
    // The average of the affected row still comes from the populated cells.
    for (const auto& row : table.rows) CHECK(row.average.has_value());
}

TEST_CASE("bd table renderings are deterministic and carry the data") {
    const BenchmarkResult result = synthetic_result({"psnr-y"}, 2);
    const BdTable table = bd_table(result, {"psnr-y"}, {"pre", "post"});
    const std::string text = render_bd_table_text(table);
    CHECK(text.find("S1") != std::string::npos);
    CHECK(text.find("avg") != std::string::npos);
    CHECK(text == render_bd_table_text(table));
    const std::string csv = render_bd_table_csv(table);
    CHECK(csv.find("metric,workflow,S1,S2,avg") == 0);
    const std::string json = render_bd_table_json(table);
    CHECK(json.find("\"method\": \"cubic-fit\"") != std::string::npos);
}

TEST_CASE("curve export round trip preserves values exactly") {
    TempDir tmp;
    const BenchmarkResult result = synthetic_result({"psnr-y", "piqe"}, 2);
    export_curves_csv(result, tmp / "curves.csv");
    const auto loaded = load_curves_csv(tmp / "curves.csv");
    CHECK(loaded.size() == result.curves.size());
    for (const LabeledCurve& lc : loaded) {
        const CurveKey key{lc.sequence_id, lc.curve.label, lc.curve.metric_id};
        const RQCurve& original = result.curves.at(key);
        REQUIRE(lc.curve.points.size() == original.points.size());
        for (std::size_t i = 0; i < original.points.size(); ++i) {
            CHECK(lc.curve.points[i].rate_kbps == original.points[i].rate_kbps);
            CHECK(lc.curve.points[i].quality == original.points[i].quality);
        }
    }

    // Byte determinism.
    CHECK(curves_to_csv(result) == curves_to_csv(result));
    CHECK(curves_to_json(result) == curves_to_json(result));
}

TEST_CASE("curve export rejects empty results") {
    const BenchmarkResult empty;
    CHECK_THROWS_AS(curves_to_csv(empty), DataError);
    CHECK_THROWS_AS(curves_to_json(empty), DataError);
}

TEST_CASE("svg plot structure") {
    std::vector<PlotSeries> series(2);
    series[0].label = "anchor";
    series[0].points = {{100, 30}, {200, 33}, {400, 35}};
    series[1].label = "post";
    series[1].points = {{110, 31}, {210, 34}, {390, 36}};
    const SvgPlot plot = plot_svg(series);

    std::size_t polylines = 0;
    std::size_t pos = 0;
    while ((pos = plot.svg.find("<polyline", pos)) != std::string::npos) {
        ++polylines;
        pos += 9;
    }
    CHECK(polylines == 2);
    CHECK(plot.svg.find("anchor") != std::string::npos);
    CHECK(plot.svg.find("<svg xmlns") == 0);

    // Axis bounds envelop the data (log10 rate axis).
    CHECK(plot.x_min <= std::log10(100.0));
    CHECK(plot.x_max >= std::log10(400.0));
    CHECK(plot.y_min <= 30.0);
    CHECK(plot.y_max >= 36.0);
}

TEST_CASE("svg single-point series gets a marker but no polyline") {
    std::vector<PlotSeries> series(1);
    series[0].label = "solo";
    series[0].points = {{150, 32}};
    const SvgPlot plot = plot_svg(series);
    CHECK(plot.svg.find("<polyline") == std::string::npos);
    CHECK(plot.svg.find("<circle") != std::string::npos);
}

TEST_CASE("svg plot input validation") {
    CHECK_THROWS_AS(plot_svg({}), DataError);
    std::vector<PlotSeries> bad(1);
    bad[0].label = "neg";
    bad[0].points = {{-5, 1}};
    CHECK_THROWS_AS(plot_svg(bad), DataError);  // log axis needs positive x
    PlotOptions linear;
    linear.log_x = false;
    CHECK_NOTHROW(plot_svg(bad, linear));
}

TEST_CASE("score exports") {
    SequenceScore score;
    score.metric_id = "psnr";
    score.plane = "y";
    score.per_frame = {{0, 40.0}, {1, 41.0}};
    score.pooled = 40.5;
    const std::string csv = scores_to_csv({score});
    CHECK(csv.find("frame,metric,plane,value") == 0);
    CHECK(csv.find("pooled,psnr,y,40.5") != std::string::npos);
    const std::string json = scores_to_json({score});
    CHECK(json.find("\"pooled\": 40.5") != std::string::npos);
}
