#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>

#include "llbench/fr_metrics.hpp"
#include "llbench/pipeline.hpp"
#include "llbench/sha256.hpp"
#include "llbench/subprocess.hpp"
#include "support/mock_backend.hpp"
#include "support/synth.hpp"
#include "support/temp_dir.hpp"

using namespace llb;
using namespace testsupport;

namespace {

std::string mockcodec_path() {
    const char* env = std::getenv("MOCKCODEC");
    return env ? env : "./tools/mockcodec";
}

CodecAdapter mock_adapter(double anchor_rate = 20000.0) {
    CodecAdapter adapter;
    adapter.name = "mockcodec";
    adapter.encode_template = mockcodec_path() +
                              " encode --input={input} --output={output} --qp={qp}"
                              " --qpif-frame={qpif_frame} --width={width} --height={height}"
                              " --bitdepth={bitdepth} --fps={fps} --frames={frames}"
                              " --anchor-rate=" +
                              std::to_string(anchor_rate);
    adapter.decode_template = mockcodec_path() + " decode --input={input} --output={output}";
    adapter.supports_qpif = true;
    return adapter;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    // Multi-block message.
    CHECK(sha256_hex(std::string(1000, 'a')) ==
          "41edece42d63e8d9bf515a9ba6932e1c20cbc9f5a5d134645adb5db1b9737ea3");
}

TEST_CASE("coding constraint validation") {
    const ConstraintReport pass30 = validate_coding_constraints(16, 32, Fps{30, 1});
    CHECK(pass30.all_pass);
    const ConstraintReport pass60 = validate_coding_constraints(16, 64, Fps{60, 1});
    CHECK(pass60.all_pass);

    const ConstraintReport gop_fail = validate_coding_constraints(32, 32, Fps{30, 1});
    CHECK_FALSE(gop_fail.all_pass);
    CHECK_FALSE(gop_fail.rules[0].pass);  // structural delay
    CHECK(gop_fail.rules[1].pass);

    const ConstraintReport ra_fail = validate_coding_constraints(16, 34, Fps{30, 1});
    CHECK_FALSE(ra_fail.all_pass);
    CHECK(ra_fail.rules[0].pass);
    CHECK_FALSE(ra_fail.rules[1].pass);

    // 33 frames at 30 fps is exactly 1.1 s, which is allowed.
    CHECK(validate_coding_constraints(16, 33, Fps{30, 1}).all_pass);

    CHECK_THROWS_AS(validate_coding_constraints(0, 32, Fps{30, 1}), ConfigError);
}

TEST_CASE("compute_bitrate") {
    CHECK(compute_bitrate(600000, 64, Fps{60, 1}) == doctest::Approx(4500.0).epsilon(1e-12));
    CHECK(compute_bitrate(0, 10, Fps{30, 1}) == 0.0);
    CHECK_THROWS_AS(compute_bitrate(1000, 0, Fps{30, 1}), ConfigError);
}

TEST_CASE("command template expansion") {
    const auto argv = expand_command_template(
        "enc --in={input} --qp={qp} --qpif={qpif_frame} go",
        {{"input", "a.yuv"}, {"qp", "30"}, {"qpif_frame", "12"}});
    CHECK(argv == std::vector<std::string>{"enc", "--in=a.yuv", "--qp=30", "--qpif=12", "go"});

    // Tokens with an unresolved optional placeholder are dropped.
    const auto no_qpif = expand_command_template("enc --in={input} --qpif={qpif_frame}",
                                                 {{"input", "a.yuv"}}, {"qpif_frame"});
    CHECK(no_qpif == std::vector<std::string>{"enc", "--in=a.yuv"});

    CHECK_THROWS_AS(expand_command_template("enc {missing}", {{"input", "a"}}), ConfigError);
    CHECK_THROWS_AS(expand_command_template("   ", {}), ConfigError);
}

TEST_CASE("run_command captures output and exit codes") {
    const CommandResult echo = run_command({"/bin/echo", "hello"});
    CHECK(echo.exit_code == 0);
    CHECK(echo.output == "hello\n");
    const CommandResult fail = run_command({"/bin/false"});
    CHECK(fail.exit_code == 1);
    const CommandResult missing = run_command({"definitely-not-a-binary-xyz"});
    CHECK(missing.exit_code == 127);
}

TEST_CASE("hit_target_rate accepts within the band on the closed-form mock") {
    MockRateBackend backend(20000.0, 64);
    // Target exactly at R(37): phase 1 terminates without a switch frame.
    const double target = backend.model_rate(37);
    const RunResult run = hit_target_rate(backend, target);
    CHECK(run.within_tolerance);
    CHECK_FALSE(run.qpif_frame.has_value());
    CHECK(run.bitrate_kbps >= 0.95 * target);
    CHECK(run.bitrate_kbps <= 1.03 * target);
}

TEST_CASE("hit_target_rate uses the switch frame for gap targets") {
    MockRateBackend backend(20000.0, 64);
    // Mid-gap target: R(qa+1) undershoots 0.95*T, so phase 2 must engage.
    // R(30)/R(31) ratio is 2^(1/6) = 1.122; pick T so R(31) < 0.95 T.
    const double target = backend.model_rate(31) * 1.08;
    backend.reset_calls();
    const RunResult run = hit_target_rate(backend, target);
    CHECK(run.within_tolerance);
    REQUIRE(run.qpif_frame.has_value());
    CHECK(run.qp == 30);
    CHECK(run.bitrate_kbps >= 0.95 * target);
    CHECK(run.bitrate_kbps <= 1.03 * target);
    // Linear mock rate: the interpolated switch frame lands in band
    // immediately; bisection (<= 8 probes) + 1 refinement + 1 final run.
    CHECK(backend.calls() <= 10);
}

TEST_CASE("hit_target_rate on 20 random targets never exceeds the ceiling") {
    std::mt19937_64 rng(71);
    MockRateBackend backend(20000.0, 64);
    const double lo = backend.model_rate(55);
    const double hi = backend.model_rate(5);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (int i = 0; i < 20; ++i) {
        const double target = dist(rng);
        const RunResult run = hit_target_rate(backend, target);
        CHECK(run.within_tolerance);
        CHECK(run.bitrate_kbps <= 1.03 * target);
        CHECK(run.bitrate_kbps >= 0.95 * target);
    }
}

TEST_CASE("hit_target_rate reports unreachable targets") {
    MockRateBackend backend(20000.0, 64);
    CHECK_THROWS_AS(hit_target_rate(backend, 1e9), DataError);
    CHECK_THROWS_AS(hit_target_rate(backend, backend.model_rate(63) * 0.5), DataError);
    CHECK_THROWS_AS(hit_target_rate(backend, -5.0), ConfigError);
}

TEST_CASE("hit_target_rate flags non-monotone adapters") {
    MockRateBackend backend(20000.0, 64);
    // Rate spike above the bracket's low-QP rate: the search bisects
    // 31 -> 47 for this target and must observe R(47) > R(31).
    backend.set_rate_hook([&backend](int qp, std::optional<int> qpif) {
        if (qp == 47) return backend.model_rate(20, qpif);
        return backend.model_rate(qp, qpif);
    });
    const double target = backend.model_rate(37);
    CHECK_THROWS_AS(hit_target_rate(backend, target), DataError);
}

TEST_CASE("hit_target_rate without qpif support falls back flagged") {
    MockRateBackend backend(20000.0, 64, /*qpif=*/false);
    const double target = backend.model_rate(31) * 1.08;  // gap target
    const RunResult run = hit_target_rate(backend, target);
    CHECK_FALSE(run.within_tolerance);
    CHECK_FALSE(run.qpif_frame.has_value());
}

TEST_CASE("command backend runs the mock codec and caches by digest") {
    TempDir tmp;
    const VideoFormat fmt = make_format(32, 32, 8, 30, 0);
    const auto clip = noisy_static_clip(make_format(32, 32, 8), 10, 8.0, 72);
    write_clip(tmp / "in.yuv", make_format(32, 32, 8), clip);

    VideoFormat resolved = fmt;
    resolved.frame_count = 10;
    EncodeCache cache(tmp / "cache");
    InvocationCounters counters;
    CommandBackend backend(mock_adapter(8000.0), resolved, tmp / "in.yuv", tmp / "work", &cache,
                           &counters);

    const RunResult first = backend.run(30, std::nullopt, false, true);
    CHECK(counters.encode_calls.load() == 1);
    CHECK_FALSE(first.from_cache);
    // Model: 8000 * 2^-5 = 250 kbps over 1/3 s -> 10417 bytes.
    CHECK(first.bitrate_kbps == doctest::Approx(250.0).epsilon(1e-3));
    CHECK(std::filesystem::exists(first.decoded_path));

    const RunResult second = backend.run(30, std::nullopt, false, true);
    CHECK(second.from_cache);
    CHECK(counters.encode_calls.load() == 1);
    CHECK(second.bitrate_kbps == first.bitrate_kbps);
    CHECK(second.cache_key == first.cache_key);

    const RunResult forced = backend.run(30, std::nullopt, true, true);
    CHECK_FALSE(forced.from_cache);
    CHECK(counters.encode_calls.load() == 2);

    // Pruned media still serves rate-only lookups.
    cache.prune_media(first.cache_key);
    const RunResult rate_only = backend.run(30, std::nullopt, false, false);
    CHECK(rate_only.from_cache);
    CHECK(counters.encode_calls.load() == 2);
    const RunResult refill = backend.run(30, std::nullopt, false, true);
    CHECK_FALSE(refill.from_cache);
    CHECK(counters.encode_calls.load() == 3);
}

TEST_CASE("command backend surfaces encoder failures with the log") {
    TempDir tmp;
    const auto clip = noisy_static_clip(make_format(16, 16, 8), 2, 4.0, 73);
    write_clip(tmp / "in.yuv", make_format(16, 16, 8), clip);
    VideoFormat resolved = make_format(16, 16, 8, 30, 2);
    CodecAdapter broken;
    broken.name = "broken";
    broken.encode_template = "/bin/false {input} {output} {qp}";
    broken.decode_template = "/bin/true {input} {output}";
    EncodeCache cache(tmp / "cache");
    CommandBackend backend(broken, resolved, tmp / "in.yuv", tmp / "work", &cache, nullptr);
    CHECK_THROWS_AS(backend.run(30, std::nullopt, false, true), ProcessError);
}

TEST_CASE("adapter validation") {
    CodecAdapter adapter;
    adapter.name = "x";
    adapter.encode_template = "enc {input} {output}";  // missing {qp}
    adapter.decode_template = "dec {input} {output}";
    CHECK_THROWS_AS(adapter.validate(), ConfigError);
    adapter.encode_template = "enc {input} {output} {qp}";
    CHECK_NOTHROW(adapter.validate());
    adapter.decode_template = "dec {input}";
    CHECK_THROWS_AS(adapter.validate(), ConfigError);
}

TEST_CASE("rate plan validation") {
    RatePlan plan;
    plan.sequence_id = "S1";
    plan.targets_kbps = {100, 170, 300, 500};
    CHECK_NOTHROW(plan.validate());
    plan.targets_kbps = {100, 100, 300, 500};
    CHECK_THROWS_AS(plan.validate(), ConfigError);
    plan.targets_kbps = {};
    CHECK_THROWS_AS(plan.validate(), ConfigError);
}

TEST_CASE("import_scores parses pooled and per-frame rows") {
    TempDir tmp;
    const auto path = tmp / "scores.csv";
    {
        std::ofstream out(path);
        out << "sequence_id,rate_label,metric,value,frame\n";
        out << "S1,Rate1,vmaf,88.5,\n";
        out << "S1,Rate2,vmaf,91.0,0\n";
        out << "S1,Rate2,vmaf,93.0,1\n";
        out << "S1,Rate2,other,1.0,\n";
    }
    const ImportedScores imported = import_scores(path, "vmaf");
    REQUIRE(imported.cells.size() == 2);
    CHECK(imported.cells.at({"S1", "Rate1"}).pooled == 88.5);
    const SequenceScore& r2 = imported.cells.at({"S1", "Rate2"});
    CHECK(r2.per_frame.size() == 2);
    CHECK(r2.pooled == doctest::Approx(92.0).epsilon(1e-12));

    CHECK_THROWS_AS(import_scores(path, "vmaf", 3), FormatError);  // frame-count mismatch
    CHECK_THROWS_AS(import_scores(path, "niqe"), FormatError);     // no rows for metric
}

TEST_CASE("export-import round trip of native scores preserves pooled values") {
    TempDir tmp;
    const VideoFormat fmt = make_format(32, 32, 8);
    const auto ref_clip = noisy_static_clip(fmt, 4, 6.0, 81);
    const auto dist_clip = noisy_static_clip(fmt, 4, 12.0, 82);
    write_clip(tmp / "ref.yuv", fmt, ref_clip);
    write_clip(tmp / "dist.yuv", fmt, dist_clip);
    const YuvReader ref(tmp / "ref.yuv", fmt);
    const YuvReader dist(tmp / "dist.yuv", fmt);
    const SequenceScore native = psnr_sequence(ref, dist, PlaneId::Y);

    const auto csv = tmp / "export.csv";
    {
        std::ofstream out(csv);
        out << "sequence_id,rate_label,metric,value,frame\n";
        char buf[64];
        for (const FrameScore& f : native.per_frame) {
            std::snprintf(buf, sizeof(buf), "%.17g", f.value);
            out << "S1,Rate1,psnr-y," << buf << "," << f.frame_index << "\n";
        }
    }
    const ImportedScores imported = import_scores(csv, "psnr-y", 4);
    CHECK(std::abs(imported.cells.at({"S1", "Rate1"}).pooled - native.pooled) < 1e-12);
}

TEST_CASE("run_benchmark joins imports, honors workflow scope, and prunes media") {
    TempDir tmp;
    const VideoFormat fmt = make_format(32, 32, 8, 30);
    write_clip(tmp / "s1.yuv", fmt, noisy_static_clip(fmt, 8, 4.0, 83));
    {
        std::ofstream out(tmp / "vmaf.csv");
        out << "sequence_id,rate_label,metric,value\n";
        out << "S1,Rate1,vmaf,70\n";
        out << "S1,Rate2,vmaf,80\n";
    }

    BenchmarkSpec spec;
    spec.adapter = mock_adapter(8000.0);
    spec.sequences.push_back(SequenceSpec{"S1", tmp / "s1.yuv", fmt});
    RatePlan plan;
    plan.sequence_id = "S1";
    plan.targets_kbps = {200, 400};
    spec.rate_plans.push_back(plan);
    spec.workflows = {Workflow::Anchor, Workflow::Post};
    spec.metrics = {"psnr-y"};
    FilterHook post;
    post.kind = FilterHook::Kind::ExternalCommand;
    post.command_template = "cp {input} {output}";
    spec.post_hook = post;
    spec.imports.push_back(ImportSpec{"vmaf", tmp / "vmaf.csv", "anchor"});
    spec.workdir = tmp / "work";
    spec.jobs = 1;
    spec.retain_decoded = false;

    const BenchmarkResult result = run_benchmark(spec);
    REQUIRE(result.failures.empty());
    REQUIRE(result.cells.size() == 4);
    for (const BenchmarkCell& cell : result.cells) {
        const bool is_anchor = cell.workflow == Workflow::Anchor;
        CHECK(cell.scores.size() == (is_anchor ? 2 : 1));  // vmaf joins only the anchor
        // retain_decoded=false prunes the cached media after scoring.
        CHECK_FALSE(std::filesystem::exists(tmp / "work" / "cache" / cell.run.cache_key /
                                            "decoded.yuv"));
    }
    CHECK(result.curves.count(CurveKey{"S1", "anchor", "vmaf"}) == 1);
    CHECK(result.curves.count(CurveKey{"S1", "post", "vmaf"}) == 0);

    // Identity post-workflow scores equal the anchor's bit for bit.
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const BenchmarkCell& cell = result.cells[i];
        if (cell.workflow != Workflow::Post) continue;
        for (const BenchmarkCell& other : result.cells) {
            if (other.workflow == Workflow::Anchor && other.rate_label == cell.rate_label) {
                CHECK(cell.scores[0].pooled == other.scores[0].pooled);
                CHECK(cell.run.bitrate_kbps == other.run.bitrate_kbps);
            }
        }
    }

    // save/load round trip keeps cells and curves.
    save_benchmark_result(result, tmp / "results.json");
    const BenchmarkResult loaded = load_benchmark_result(tmp / "results.json");
    CHECK(loaded.cells.size() == result.cells.size());
    CHECK(loaded.curves.size() == result.curves.size());
    for (const auto& [key, curve] : result.curves) {
        const RQCurve& other = loaded.curves.at(key);
        REQUIRE(other.points.size() == curve.points.size());
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
            CHECK(other.points[i].rate_kbps == curve.points[i].rate_kbps);
            CHECK(other.points[i].quality == curve.points[i].quality);
        }
    }
}

TEST_CASE("run_benchmark preserves partial results when cells fail") {
    TempDir tmp;
    const VideoFormat fmt = make_format(32, 32, 8, 30);
    write_clip(tmp / "s1.yuv", fmt, noisy_static_clip(fmt, 8, 4.0, 84));

    BenchmarkSpec spec;
    spec.adapter = mock_adapter(8000.0);
    spec.sequences.push_back(SequenceSpec{"S1", tmp / "s1.yuv", fmt});
    RatePlan plan;
    plan.sequence_id = "S1";
    plan.targets_kbps = {200, 1e9};  // the second target is unreachable
    spec.rate_plans.push_back(plan);
    spec.workflows = {Workflow::Anchor};
    spec.metrics = {"psnr-y"};
    spec.workdir = tmp / "work";
    spec.jobs = 1;

    const BenchmarkResult result = run_benchmark(spec);
    REQUIRE(result.cells.size() == 2);
    CHECK_FALSE(result.cells[0].failed());
    CHECK(result.cells[1].failed());
    CHECK(result.failures.size() == 1);
    CHECK(result.failures[0].find("Rate2") != std::string::npos);
    // The surviving cell still contributes its curve point.
    const RQCurve& curve = result.curves.at(CurveKey{"S1", "anchor", "psnr-y"});
    CHECK(curve.points.size() == 1);
}

TEST_CASE("load_benchmark_spec parses the JSON schema") {
    TempDir tmp;
    {
        std::ofstream out(tmp / "spec.json");
        out << R"({
            "adapter": {"name": "mock", "encode": "enc {input} {output} {qp}",
                        "decode": "dec {input} {output}", "supports_qpif": false},
            "sequences": [{"id": "S1", "path": "s1.yuv", "width": 64, "height": 64,
                           "bit_depth": 10, "fps": "30000/1001", "frames": 12}],
            "rate_plans": [{"sequence": "S1", "targets_kbps": [100, 200], "tolerance_pct": 2.5}],
            "workflows": ["anchor", "pre"],
            "metrics": ["psnr-y", "aqi"],
            "pre_hook": {"kind": "builtin-denoise", "window": 7,
                         "denoise_kind": "spatiotemporal-gaussian", "spatial_sigma": 1.5},
            "imports": [{"metric": "vmaf", "path": "vmaf.csv", "workflow": "pre"}],
            "workdir": "bench_work",
            "jobs": 3,
            "retain_decoded": false,
            "pooling": "mse"
        })";
    }
    const BenchmarkSpec spec = load_benchmark_spec(tmp / "spec.json");
    CHECK(spec.adapter.name == "mock");
    CHECK_FALSE(spec.adapter.supports_qpif);
    REQUIRE(spec.sequences.size() == 1);
    CHECK(spec.sequences[0].path == tmp / "s1.yuv");  // resolved against the spec file
    CHECK(spec.sequences[0].format.bit_depth == 10);
    CHECK(spec.sequences[0].format.fps == Fps{30000, 1001});
    REQUIRE(spec.rate_plans.size() == 1);
    CHECK(spec.rate_plans[0].tolerance_pct == 2.5);
    CHECK(spec.workflows == std::vector<Workflow>{Workflow::Anchor, Workflow::Pre});
    REQUIRE(spec.pre_hook.has_value());
    CHECK(spec.pre_hook->denoise.kind == DenoiseKind::SpatiotemporalGaussian);
    REQUIRE(spec.imports.size() == 1);
    CHECK(spec.imports[0].workflow == "pre");
    CHECK(spec.workdir == tmp / "bench_work");
    CHECK(spec.jobs == 3);
    CHECK_FALSE(spec.retain_decoded);
    CHECK(spec.pooling == Pooling::PsnrOfMeanMse);

    CHECK_THROWS_AS(load_benchmark_spec(tmp / "missing.json"), IoError);
}

TEST_CASE("import_scores requires the schema columns") {
    TempDir tmp;
    const auto path = tmp / "bad.csv";
    {
        std::ofstream out(path);
        out << "sequence,rate,metric,value\n";
        out << "S1,Rate1,vmaf,88.5\n";
    }
    CHECK_THROWS_AS(import_scores(path, "vmaf"), FormatError);
}
