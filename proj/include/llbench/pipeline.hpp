#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llbench/bd_metric.hpp"
#include "llbench/noise_lab.hpp"
#include "llbench/scores.hpp"
#include "llbench/video_io.hpp"

namespace llb {

// Command templates for an external encoder/decoder pair. Placeholders:
// {input} {output} {qp} {qpif_frame} {width} {height} {fps} {frames}
// {bitdepth}. Commands run as argument vectors without shell expansion;
// tokens referencing {qpif_frame} are dropped when no switch frame is set.
struct CodecAdapter {
    std::string name;
    std::string encode_template;
    std::string decode_template;
    bool supports_qpif = true;

    void validate() const;
};

struct RatePlan {
    std::string sequence_id;
    std::vector<double> targets_kbps;  // strictly increasing
    double tolerance_pct = 3.0;

    void validate() const;
};

struct RunResult {
    int qp = -1;
    std::optional<int> qpif_frame;
    std::int64_t bitstream_bytes = 0;
    double bitrate_kbps = 0.0;
    std::filesystem::path decoded_path;
    std::string encode_log;
    std::string cache_key;
    bool from_cache = false;
    bool within_tolerance = true;
};

struct ConstraintReport {
    struct Rule {
        std::string name;
        bool pass = false;
        std::string detail;
    };
    std::vector<Rule> rules;
    bool all_pass = false;
};

// JVET-style coding constraints: structural delay (GOP) of at most 16
// frames and a random-access interval of at most 1.1 s.
ConstraintReport validate_coding_constraints(int gop, int intra_period, Fps fps);

// 8*bytes / (frames/fps) / 1000
double compute_bitrate(std::int64_t bitstream_bytes, std::int64_t frames, Fps fps);

// Disk-backed store of encode results keyed by a content digest. Entries
// that had their media pruned still serve rate-only lookups.
class EncodeCache {
public:
    explicit EncodeCache(std::filesystem::path root);

    std::optional<RunResult> lookup(const std::string& key, bool need_decoded) const;
    void store(const std::string& key, RunResult& result,
               const std::filesystem::path& bitstream_src,
               const std::filesystem::path& decoded_src);
    void prune_media(const std::string& key);

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
};

// One encode+decode execution seam; lets the QP search run against a
// closed-form rate model in tests.
class EncodeBackend {
public:
    virtual ~EncodeBackend() = default;
    virtual RunResult run(int qp, std::optional<int> qpif_frame, bool bypass_cache,
                          bool need_decoded) = 0;
    virtual std::int64_t frame_count() const = 0;
    virtual bool supports_qpif() const = 0;
};

struct InvocationCounters {
    std::atomic<std::int64_t> encode_calls{0};
    std::atomic<std::int64_t> cache_hits{0};
};

// Runs the adapter commands in a scratch directory and caches by
// digest of (adapter templates, input content hash, qp, qpif_frame).
class CommandBackend : public EncodeBackend {
public:
    CommandBackend(CodecAdapter adapter, VideoFormat format, std::filesystem::path input,
                   std::filesystem::path workdir, EncodeCache* cache,
                   InvocationCounters* counters = nullptr);

    RunResult run(int qp, std::optional<int> qpif_frame, bool bypass_cache,
                  bool need_decoded) override;
    std::int64_t frame_count() const override { return format_.frame_count; }
    bool supports_qpif() const override { return adapter_.supports_qpif; }

    const std::string& input_digest() const { return input_digest_; }

private:
    std::string cache_key(int qp, std::optional<int> qpif_frame) const;

    CodecAdapter adapter_;
    VideoFormat format_;
    std::filesystem::path input_;
    std::filesystem::path workdir_;
    EncodeCache* cache_;
    InvocationCounters* counters_;
    std::string input_digest_;
};

// Two-phase target-rate search: integer QP bisection down to the adjacent
// pair straddling 1.03*target, then (when supported) a QP-increment switch
// frame refined by secant steps. Accepts the first rate in
// [1 - undershoot, 1 + tolerance/100] * target; an exhausted budget
// returns the closest attempt flagged out of tolerance.
RunResult hit_target_rate(EncodeBackend& backend, double target_kbps, double tolerance_pct = 3.0);

enum class Workflow { Anchor, Pre, Post };

const char* workflow_name(Workflow workflow);
Workflow parse_workflow(const std::string& name);

struct FilterHook {
    enum class Kind { BuiltinDenoise, ExternalCommand };
    Kind kind = Kind::BuiltinDenoise;
    DenoiseConfig denoise;         // BuiltinDenoise
    std::string command_template;  // ExternalCommand: {input} {output} + geometry placeholders
};

struct SequenceSpec {
    std::string id;
    std::filesystem::path path;
    VideoFormat format;
};

struct ImportSpec {
    std::string metric_id;
    std::filesystem::path path;
    std::string workflow;  // empty = join every workflow's cells
};

struct BenchmarkSpec {
    CodecAdapter adapter;
    std::vector<SequenceSpec> sequences;
    std::vector<RatePlan> rate_plans;
    std::vector<Workflow> workflows;
    std::vector<std::string> metrics;  // psnr-y, psnr-u, psnr-v, ssim, ms-ssim, piqe, niqe, aqi
    std::optional<FilterHook> pre_hook;
    std::optional<FilterHook> post_hook;
    std::filesystem::path niqe_model;
    std::vector<ImportSpec> imports;
    std::filesystem::path workdir;
    int jobs = 0;                // 0 = hardware concurrency
    bool retain_decoded = true;  // prune cached media after scoring when false
    Pooling pooling = Pooling::MeanOfFrameScores;
};

BenchmarkSpec load_benchmark_spec(const std::filesystem::path& path);

struct BenchmarkCell {
    std::string sequence_id;
    std::string rate_label;  // "Rate1"..
    double target_kbps = 0.0;
    Workflow workflow = Workflow::Anchor;
    RunResult run;
    std::vector<SequenceScore> scores;
    std::string error;  // nonempty when the cell failed

    bool failed() const { return !error.empty(); }
};

struct CurveKey {
    std::string sequence_id;
    std::string workflow;
    std::string metric_id;

    auto operator<=>(const CurveKey&) const = default;
};

struct BenchmarkResult {
    std::vector<BenchmarkCell> cells;  // sorted by (sequence, rate, workflow)
    std::map<CurveKey, RQCurve> curves;
    std::vector<std::string> failures;
    std::int64_t encode_calls = 0;
    std::int64_t cache_hits = 0;

    void rebuild_curves();  // curves from non-failed cells
};

BenchmarkResult run_benchmark(const BenchmarkSpec& spec);

void save_benchmark_result(const BenchmarkResult& result, const std::filesystem::path& path);
BenchmarkResult load_benchmark_result(const std::filesystem::path& path);

// Imported per-sequence/rate scores for one metric, keyed by
// (sequence_id, rate_label).
struct ImportedScores {
    std::string metric_id;
    std::map<std::pair<std::string, std::string>, SequenceScore> cells;
};

// CSV columns: sequence_id, rate_label, metric, value [, frame]. Rows with
// a frame index must cover 0..expected_frames-1 per cell.
ImportedScores import_scores(const std::filesystem::path& path, const std::string& metric_id,
                             std::int64_t expected_frames = 0);

}  // namespace llb
