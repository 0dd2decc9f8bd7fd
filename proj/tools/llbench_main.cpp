// llbench - benchmarking toolkit for compression of low-light video.
//
// Subcommands: probe-noise, denoise, metric-fr, metric-nr, fit-niqe, bd,
// encode, benchmark, report. Exit codes: 0 success, 1 domain error,
// 2 usage error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "llbench/fr_metrics.hpp"
#include "llbench/noise_lab.hpp"
#include "llbench/nr_metrics.hpp"
#include "llbench/pipeline.hpp"
#include "llbench/report.hpp"

namespace fs = std::filesystem;
using namespace llb;

namespace {

struct GeometryArgs {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    std::string fps = "30";
    int frames = 0;
    bool lenient = false;
};

void add_geometry_options(CLI::App* cmd, GeometryArgs& geometry) {
    cmd->add_option("--width", geometry.width, "frame width (raw YUV input)");
    cmd->add_option("--height", geometry.height, "frame height (raw YUV input)");
    cmd->add_option("--bit-depth", geometry.bit_depth, "8 or 10")->check(CLI::IsMember({8, 10}));
    cmd->add_option("--fps", geometry.fps, "frame rate, N or N/D (e.g. 30000/1001)");
    cmd->add_option("--frames", geometry.frames, "frame count (0 = infer from file size)");
    cmd->add_flag("--lenient", geometry.lenient, "clip out-of-range samples instead of failing");
}

// Explicit flags win; otherwise open_video falls back to a geometry
// sidecar (raw input) or the stream header (.y4m).
std::optional<VideoFormat> format_of(const GeometryArgs& geometry, const fs::path& path) {
    if (path.extension() == ".y4m") return std::nullopt;
    if (geometry.width <= 0 || geometry.height <= 0) return std::nullopt;
    VideoFormat format;
    format.width = geometry.width;
    format.height = geometry.height;
    format.bit_depth = geometry.bit_depth;
    format.fps = Fps::parse(geometry.fps);
    format.frame_count = geometry.frames;
    return format;
}

std::unique_ptr<VideoReader> open_input(const GeometryArgs& geometry, const fs::path& path) {
    return open_video(path, format_of(geometry, path), !geometry.lenient);
}

CodecAdapter load_adapter(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read adapter " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad adapter JSON in " + path.string() + ": " + e.what());
    }
    CodecAdapter adapter;
    adapter.name = j.at("name").get<std::string>();
    adapter.encode_template = j.at("encode").get<std::string>();
    adapter.decode_template = j.at("decode").get<std::string>();
    adapter.supports_qpif = j.value("supports_qpif", true);
    adapter.validate();
    return adapter;
}

void print_run_result(const RunResult& run) {
    nlohmann::ordered_json j;
    j["qp"] = run.qp;
    if (run.qpif_frame)
        j["qpif_frame"] = *run.qpif_frame;
    else
        j["qpif_frame"] = nullptr;
    j["bitstream_bytes"] = run.bitstream_bytes;
    j["bitrate_kbps"] = run.bitrate_kbps;
    j["decoded_path"] = run.decoded_path.string();
    j["within_tolerance"] = run.within_tolerance;
    j["from_cache"] = run.from_cache;
    j["cache_key"] = run.cache_key;
    std::cout << j.dump(2) << "\n";
}

int cmd_probe_noise(const fs::path& input, const GeometryArgs& geometry,
                    const std::string& probes_file, const std::string& region_text, int window,
                    const fs::path& out_dir) {
    const auto reader = open_input(geometry, input);
    std::vector<ProbeLocation> probes;
    if (!probes_file.empty()) {
        probes = load_probes_json(probes_file);
    } else {
        std::optional<ProbeRegion> region;
        if (!region_text.empty()) {
            ProbeRegion r;
            if (std::sscanf(region_text.c_str(), "%d,%d,%d,%d", &r.x, &r.y, &r.width,
                            &r.height) != 4)
                throw ConfigError("--region must be x,y,w,h");
            region = r;
        }
        probes = default_probe_grid(reader->format(), region);
    }
    const NoiseProfile profile = temporal_profile(*reader, probes, window);

    fs::create_directories(out_dir);
    write_text_file(out_dir / "profile.csv", noise_profile_csv(profile));
    write_text_file(out_dir / "summary.csv", noise_profile_summary_csv(profile));
    write_text_file(out_dir / "profile.svg", noise_profile_svg(profile).svg);
    for (std::size_t p = 0; p < profile.probes.size(); ++p)
        std::cout << profile.probes[p].label << " (" << profile.probes[p].x << ","
                  << profile.probes[p].y << ") mae " << profile.mae[p] << "\n";
    std::cout << "wrote " << (out_dir / "profile.csv").string() << ", summary.csv, profile.svg\n";
    return 0;
}

int cmd_denoise(const fs::path& input, const GeometryArgs& geometry, const fs::path& output,
                const std::string& kind, int window, double spatial_sigma,
                const std::vector<double>& weights) {
    const auto reader = open_input(geometry, input);
    DenoiseConfig config;
    config.kind = kind == "spatiotemporal-gaussian" ? DenoiseKind::SpatiotemporalGaussian
                                                    : DenoiseKind::TemporalMovingAverage;
    if (kind != "temporal-moving-average" && kind != "spatiotemporal-gaussian")
        throw ConfigError("unknown denoiser kind '" + kind + "'");
    config.window = window;
    config.spatial_sigma = spatial_sigma;
    config.weights = weights;
    YuvWriter writer(output, reader->format());
    denoise(*reader, writer, config);
    std::cout << "denoised " << reader->frame_count() << " frames -> " << output.string() << "\n";
    return 0;
}

int cmd_metric_fr(const fs::path& ref, const fs::path& dist, const GeometryArgs& geometry,
                  const std::string& metric, const std::string& plane, const std::string& pooling,
                  bool no_downsample, const fs::path& out_dir) {
    const auto ref_reader = open_input(geometry, ref);
    const auto dist_reader = open_input(geometry, dist);
    SequenceScore score;
    if (metric == "psnr") {
        score = psnr_sequence(*ref_reader, *dist_reader, parse_plane(plane),
                              parse_pooling(pooling));
    } else if (metric == "ssim") {
        SsimConfig config;
        config.auto_downsample = !no_downsample;
        score = ssim_sequence(*ref_reader, *dist_reader, config);
    } else if (metric == "ms-ssim") {
        score = ms_ssim_sequence(*ref_reader, *dist_reader);
    } else {
        throw ConfigError("unknown FR metric '" + metric + "'");
    }
    std::cout << score.metric_id << " (" << score.plane << ", " << pooling_name(score.pooling)
              << "): " << score.pooled << "\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text_file(out_dir / "scores.csv", scores_to_csv({score}));
        write_text_file(out_dir / "scores.json", scores_to_json({score}));
    }
    return 0;
}

int cmd_metric_nr(const fs::path& input, const GeometryArgs& geometry, const std::string& metric,
                  const fs::path& model_path, const fs::path& out_dir) {
    const auto reader = open_input(geometry, input);
    NiqeModel model;
    const NiqeModel* model_ptr = nullptr;
    const NrMetric nr = parse_nr_metric(metric);
    if (nr == NrMetric::Niqe) {
        if (model_path.empty()) throw ConfigError("niqe needs --model");
        model = load_niqe_model(model_path);
        model_ptr = &model;
    }
    const SequenceScore score = nr_sequence(*reader, nr, model_ptr);
    std::cout << score.metric_id << ": " << score.pooled << "\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text_file(out_dir / "scores.csv", scores_to_csv({score}));
        write_text_file(out_dir / "scores.json", scores_to_json({score}));
    }
    return 0;
}

int cmd_fit_niqe(const fs::path& corpus_dir, const GeometryArgs& geometry, int max_frames,
                 const fs::path& out_path) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(corpus_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext == ".yuv" || ext == ".y4m") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no .yuv/.y4m files in " + corpus_dir.string());

    std::vector<PlaneF64> corpus;
    for (const fs::path& file : files) {
        const auto reader = open_input(geometry, file);
        std::int64_t take = reader->frame_count();
        if (max_frames > 0) take = std::min<std::int64_t>(take, max_frames);
        for (std::int64_t i = 0; i < take; ++i)
            corpus.push_back(luma_as_gray255(reader->read_frame(i)));
    }
    const NiqeModel model = fit_niqe_model(corpus, NiqeConfig{},
                                           corpus_dir.filename().string() + " (" +
                                               std::to_string(corpus.size()) + " frames)");
    save_niqe_model(model, out_path);
    std::cout << "fitted NIQE model from " << corpus.size() << " frames -> " << out_path.string()
              << "\n";
    return 0;
}

RQCurve select_curve(const std::vector<LabeledCurve>& curves, const std::string& metric,
                     const fs::path& path) {
    for (const LabeledCurve& c : curves)
        if (metric.empty() || c.curve.metric_id == metric) return c.curve;
    throw DataError("no curve" + (metric.empty() ? "" : " for metric '" + metric + "'") + " in " +
                    path.string());
}

int cmd_bd(const fs::path& anchor_path, const fs::path& test_path, const std::string& metric,
           const std::string& method_name, int min_points, const std::string& mode) {
    const RQCurve anchor = select_curve(load_curves_csv(anchor_path), metric, anchor_path);
    const RQCurve test = select_curve(load_curves_csv(test_path), metric, test_path);
    const BdMethod method = parse_bd_method(method_name);
    char buf[64];
    if (mode == "rate" || mode == "both") {
        const BdResult r = bd_rate(anchor, test, method, min_points);
        std::snprintf(buf, sizeof(buf), "%.4f", r.bd_rate_pct);
        std::cout << "BD-Rate (" << bd_method_name(method) << "): " << buf << "%\n";
    }
    if (mode == "quality" || mode == "both") {
        const BdResult q = bd_quality(anchor, test, method, min_points);
        std::snprintf(buf, sizeof(buf), "%.6f", q.bd_quality);
        std::cout << "BD-Quality (" << bd_method_name(method) << "): " << buf << "\n";
    }
    return 0;
}

int cmd_encode(const fs::path& input, const GeometryArgs& geometry, const fs::path& adapter_path,
               int qp, int qpif_frame, double target, double tolerance, const fs::path& workdir,
               bool validate_only, int gop, int intra_period) {
    if (validate_only || gop > 0 || intra_period > 0) {
        if (gop <= 0 || intra_period <= 0)
            throw ConfigError("constraint validation needs --gop and --intra-period");
        const ConstraintReport report =
            validate_coding_constraints(gop, intra_period, Fps::parse(geometry.fps));
        for (const auto& rule : report.rules)
            std::cout << (rule.pass ? "PASS" : "FAIL") << "  " << rule.name << ": " << rule.detail
                      << "\n";
        std::cout << (report.all_pass ? "all constraints satisfied" : "constraint violations found")
                  << "\n";
        if (validate_only) return 0;
    }

    if (input.empty()) throw ConfigError("encode needs --input (or --validate)");
    const VideoFormat resolved = open_input(geometry, input)->format();
    EncodeCache cache(workdir / "cache");
    InvocationCounters counters;
    CommandBackend backend(load_adapter(adapter_path), resolved, input, workdir, &cache,
                           &counters);
    RunResult run;
    if (target > 0.0) {
        run = hit_target_rate(backend, target, tolerance);
    } else {
        run = backend.run(qp, qpif_frame >= 0 ? std::optional<int>(qpif_frame) : std::nullopt,
                          false, true);
    }
    print_run_result(run);
    return 0;
}

int cmd_benchmark(const fs::path& spec_path, const fs::path& workdir_override, int jobs,
                  const fs::path& out_dir) {
    BenchmarkSpec spec = load_benchmark_spec(spec_path);
    if (!workdir_override.empty()) spec.workdir = workdir_override;
    if (spec.workdir.empty()) {
        const char* env = std::getenv("LLBENCH_WORKDIR");
        spec.workdir = env != nullptr ? fs::path(env) : out_dir / "work";
    }
    if (jobs > 0) spec.jobs = jobs;
    const BenchmarkResult result = run_benchmark(spec);

    fs::create_directories(out_dir);
    save_benchmark_result(result, out_dir / "results.json");
    export_curves_csv(result, out_dir / "curves.csv");
    export_curves_json(result, out_dir / "curves.json");
    std::cout << result.cells.size() << " cells, " << result.curves.size() << " curves, "
              << result.encode_calls << " encoder invocations, " << result.cache_hits
              << " cache hits\n";
    for (const std::string& failure : result.failures) std::cout << "failed: " << failure << "\n";
    std::cout << "wrote " << (out_dir / "results.json").string() << "\n";
    return result.failures.empty() ? 0 : 1;
}

int cmd_report(const fs::path& results_path, const fs::path& out_dir,
               std::vector<std::string> metrics, std::vector<std::string> workflows,
               const std::string& method_name, int min_points) {
    const BenchmarkResult result = load_benchmark_result(results_path);
    if (result.curves.empty()) throw DataError("result set has no curves");

    std::set<std::string> seen_metrics;
    std::set<std::string> seen_workflows;
    std::set<std::string> seen_sequences;
    for (const auto& [key, curve] : result.curves) {
        seen_metrics.insert(key.metric_id);
        seen_workflows.insert(key.workflow);
        seen_sequences.insert(key.sequence_id);
    }
    if (metrics.empty()) metrics.assign(seen_metrics.begin(), seen_metrics.end());
    if (workflows.empty()) workflows.assign(seen_workflows.begin(), seen_workflows.end());

    const BdMethod method = parse_bd_method(method_name);
    const BdTable table = bd_table(result, metrics, workflows, method, min_points);

    fs::create_directories(out_dir);
    const std::string text = render_bd_table_text(table);
    write_text_file(out_dir / "bd_table.txt", text);
    write_text_file(out_dir / "bd_table.csv", render_bd_table_csv(table));
    write_text_file(out_dir / "bd_table.json", render_bd_table_json(table));
    export_curves_csv(result, out_dir / "curves.csv");
    export_curves_json(result, out_dir / "curves.json");
    for (const std::string& seq : seen_sequences) {
        for (const std::string& metric : metrics) {
            const auto series = curves_as_series(result, metric, seq);
            if (series.empty()) continue;
            PlotOptions options;
            options.title = seq + " - " + metric;
            options.y_label = metric;
            write_text_file(out_dir / ("rq_" + seq + "_" + metric + ".svg"),
                            plot_svg(series, options).svg);
        }
    }
    std::cout << text;
    std::cout << "wrote report to " << out_dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"llbench - low-light video codec benchmarking toolkit"};
    app.require_subcommand(1);

    GeometryArgs geometry;
    fs::path input;
    fs::path ref;
    fs::path dist;
    fs::path output;
    fs::path out_dir;
    fs::path model_path;
    fs::path adapter_path;
    fs::path workdir = [] {
        const char* env = std::getenv("LLBENCH_WORKDIR");
        return env != nullptr ? fs::path(env) : fs::path("llbench_work");
    }();
    fs::path spec_path;
    fs::path results_path;
    fs::path anchor_csv;
    fs::path test_csv;
    std::string probes_file;
    std::string region_text;
    std::string metric = "psnr";
    std::string plane = "y";
    std::string pooling = "mean";
    std::string kind = "temporal-moving-average";
    std::string method_name = "cubic-fit";
    std::string bd_mode = "rate";
    std::vector<double> weights;
    std::vector<std::string> metrics_filter;
    std::vector<std::string> workflows_filter;
    bool no_downsample = false;
    bool validate_only = false;
    int window = 20;
    int qp = -1;
    int qpif_frame = -1;
    int gop = 0;
    int intra_period = 0;
    int min_points = 4;
    int max_frames = 0;
    int jobs = 0;
    double spatial_sigma = 1.0;
    double target = 0.0;
    double tolerance = 3.0;

    CLI::App* probe = app.add_subcommand("probe-noise", "temporal noise profile at probe points");
    probe->add_option("--input", input)->required();
    add_geometry_options(probe, geometry);
    probe->add_option("--probes", probes_file, "probe list JSON [{x,y,label},...]");
    probe->add_option("--region", region_text, "background region x,y,w,h for the default 3x3 grid");
    probe->add_option("--window", window, "smoothing window in frames");
    probe->add_option("--out", out_dir, "output directory")->required();

    CLI::App* den = app.add_subcommand("denoise", "temporal / spatiotemporal denoising");
    den->add_option("--input", input)->required();
    add_geometry_options(den, geometry);
    den->add_option("--output", output)->required();
    den->add_option("--kind", kind, "temporal-moving-average | spatiotemporal-gaussian");
    den->add_option("--window", window)->default_val(5);
    den->add_option("--spatial-sigma", spatial_sigma);
    den->add_option("--weights", weights, "per-tap weights (must sum to 1)")->delimiter(',');

    CLI::App* mfr = app.add_subcommand("metric-fr", "full-reference metrics");
    mfr->add_option("--ref", ref)->required();
    mfr->add_option("--dist", dist)->required();
    add_geometry_options(mfr, geometry);
    mfr->add_option("--metric", metric, "psnr | ssim | ms-ssim");
    mfr->add_option("--plane", plane, "y | u | v (psnr)");
    mfr->add_option("--pooling", pooling, "mean | mse");
    mfr->add_flag("--no-downsample", no_downsample, "disable the SSIM auto downsample");
    mfr->add_option("--out", out_dir, "write scores.csv / scores.json here");

    CLI::App* mnr = app.add_subcommand("metric-nr", "no-reference metrics");
    mnr->add_option("--input", input)->required();
    add_geometry_options(mnr, geometry);
    mnr->add_option("--metric", metric, "piqe | niqe | aqi")->required();
    mnr->add_option("--model", model_path, "NIQE model JSON");
    mnr->add_option("--out", out_dir);

    CLI::App* fit = app.add_subcommand("fit-niqe", "fit a NIQE model from a pristine corpus");
    fit->add_option("--corpus", input, "directory of .yuv/.y4m files")->required();
    add_geometry_options(fit, geometry);
    fit->add_option("--max-frames", max_frames, "frames per sequence (0 = all)");
    fit->add_option("--out", output, "model JSON path")->required();

    CLI::App* bd = app.add_subcommand("bd", "Bjontegaard delta between two curves");
    bd->add_option("--anchor", anchor_csv)->required();
    bd->add_option("--test", test_csv)->required();
    bd->add_option("--metric", metric)->default_val("");
    bd->add_option("--method", method_name, "cubic-fit | pchip");
    bd->add_option("--min-points", min_points)->check(CLI::Range(3, 16));
    bd->add_option("--mode", bd_mode, "rate | quality | both");

    CLI::App* enc = app.add_subcommand("encode", "run one encode or a target-rate search");
    enc->add_option("--input", input);
    add_geometry_options(enc, geometry);
    enc->add_option("--adapter", adapter_path, "adapter JSON (name/encode/decode templates)");
    enc->add_option("--qp", qp);
    enc->add_option("--qpif-frame", qpif_frame);
    enc->add_option("--target", target, "target rate in kbps (enables the QP search)");
    enc->add_option("--tolerance", tolerance, "overshoot tolerance in percent");
    enc->add_option("--workdir", workdir);
    enc->add_flag("--validate", validate_only, "only check coding constraints");
    enc->add_option("--gop", gop, "structural delay for --validate");
    enc->add_option("--intra-period", intra_period, "random-access interval for --validate");

    CLI::App* bench = app.add_subcommand("benchmark", "run a full benchmark spec");
    bench->add_option("--spec", spec_path)->required();
    bench->add_option("--workdir", workdir)->default_val("");
    bench->add_option("--jobs", jobs);
    bench->add_option("--out", out_dir)->required();

    CLI::App* rep = app.add_subcommand("report", "BD tables and plots from results.json");
    rep->add_option("--results", results_path)->required();
    rep->add_option("--out", out_dir)->required();
    rep->add_option("--metrics", metrics_filter)->delimiter(',');
    rep->add_option("--workflows", workflows_filter)->delimiter(',');
    rep->add_option("--method", method_name, "cubic-fit | pchip");
    rep->add_option("--min-points", min_points)->check(CLI::Range(3, 16));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (probe->parsed())
            return cmd_probe_noise(input, geometry, probes_file, region_text, window, out_dir);
        if (den->parsed())
            return cmd_denoise(input, geometry, output, kind, window, spatial_sigma, weights);
        if (mfr->parsed())
            return cmd_metric_fr(ref, dist, geometry, metric, plane, pooling, no_downsample,
                                 out_dir);
        if (mnr->parsed()) return cmd_metric_nr(input, geometry, metric, model_path, out_dir);
        if (fit->parsed()) return cmd_fit_niqe(input, geometry, max_frames, output);
        if (bd->parsed())
            return cmd_bd(anchor_csv, test_csv, metric, method_name, min_points, bd_mode);
        if (enc->parsed())
            return cmd_encode(input, geometry, adapter_path, qp, qpif_frame, target, tolerance,
                              workdir, validate_only, gop, intra_period);
        if (bench->parsed()) return cmd_benchmark(spec_path, workdir, jobs, out_dir);
        if (rep->parsed())
            return cmd_report(results_path, out_dir, metrics_filter, workflows_filter, method_name,
                              min_points);
    } catch (const ProcessError& e) {
        std::cerr << "error: " << e.what() << "\n" << e.log() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
