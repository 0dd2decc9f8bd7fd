#include "llbench/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "llbench/csv.hpp"
#include "llbench/fr_metrics.hpp"
#include "llbench/nr_metrics.hpp"
#include "llbench/sha256.hpp"
#include "llbench/subprocess.hpp"

namespace llb {

namespace fs = std::filesystem;

void CodecAdapter::validate() const {
    if (name.empty()) throw ConfigError("adapter needs a name");
    if (encode_template.find("{input}") == std::string::npos ||
        encode_template.find("{output}") == std::string::npos)
        throw ConfigError("encode template must use {input} and {output}");
    if (encode_template.find("{qp}") == std::string::npos)
        throw ConfigError("encode template must use {qp}");
    if (decode_template.find("{input}") == std::string::npos ||
        decode_template.find("{output}") == std::string::npos)
        throw ConfigError("decode template must use {input} and {output}");
}

void RatePlan::validate() const {
    if (sequence_id.empty()) throw ConfigError("rate plan needs a sequence id");
    if (targets_kbps.empty()) throw ConfigError("rate plan needs target rates");
    for (double t : targets_kbps)
        if (!(t > 0.0)) throw ConfigError("target rates must be positive");
    for (std::size_t i = 1; i < targets_kbps.size(); ++i)
        if (!(targets_kbps[i] > targets_kbps[i - 1]))
            throw ConfigError("target rates must be strictly increasing");
    if (!(tolerance_pct > 0.0)) throw ConfigError("tolerance must be positive");
}

ConstraintReport validate_coding_constraints(int gop, int intra_period, Fps fps) {
    if (gop <= 0 || intra_period <= 0 || fps.num <= 0 || fps.den <= 0)
        throw ConfigError("coding constraints need positive gop, intra period and fps");
    ConstraintReport report;
    {
        ConstraintReport::Rule rule;
        rule.name = "structural-delay";
        rule.pass = gop <= 16;
        rule.detail = "gop " + std::to_string(gop) + (rule.pass ? " <= 16" : " > 16");
        report.rules.push_back(rule);
    }
    {
        // intra_period / fps <= 1.1 s, exact in integers:
        // intra * den * 10 <= 11 * num
        ConstraintReport::Rule rule;
        rule.name = "random-access-interval";
        rule.pass = static_cast<long long>(intra_period) * fps.den * 10 <= 11LL * fps.num;
        const double seconds = intra_period / fps.as_double();
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4g s", seconds);
        rule.detail = "intra period " + std::to_string(intra_period) + " at " + fps.str() +
                      " fps = " + buf + (rule.pass ? " <= 1.1 s" : " > 1.1 s");
        report.rules.push_back(rule);
    }
    report.all_pass = true;
    for (const auto& rule : report.rules) report.all_pass = report.all_pass && rule.pass;
    return report;
}

double compute_bitrate(std::int64_t bitstream_bytes, std::int64_t frames, Fps fps) {
    if (frames <= 0) throw ConfigError("bitrate needs a positive frame count");
    const double seconds = static_cast<double>(frames) * fps.den / static_cast<double>(fps.num);
    return 8.0 * static_cast<double>(bitstream_bytes) / seconds / 1000.0;
}

namespace {

// Serializes concurrent encodes of the same cache key so parallel cells
// never duplicate work.
class KeyedLock {
public:
    std::unique_lock<std::mutex> acquire(const std::string& key) {
        std::shared_ptr<std::mutex> m;
        {
            std::lock_guard<std::mutex> guard(master_);
            auto& slot = locks_[key];
            if (!slot) slot = std::make_shared<std::mutex>();
            m = slot;
        }
        return std::unique_lock<std::mutex>(*m);
    }

private:
    std::mutex master_;
    std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

KeyedLock& run_locks() {
    static KeyedLock locks;
    return locks;
}

}  // namespace

CommandBackend::CommandBackend(CodecAdapter adapter, VideoFormat format, fs::path input,
                               fs::path workdir, EncodeCache* cache, InvocationCounters* counters)
    : adapter_(std::move(adapter)),
      format_(format),
      input_(std::move(input)),
      workdir_(std::move(workdir)),
      cache_(cache),
      counters_(counters) {
    adapter_.validate();
    format_.validate();
    if (format_.frame_count <= 0) throw ConfigError("backend needs a resolved frame count");
    if (!fs::exists(input_)) throw IoError("input does not exist: " + input_.string());
    input_digest_ = sha256_file_hex(input_);
    fs::create_directories(workdir_);
}

std::string CommandBackend::cache_key(int qp, std::optional<int> qpif_frame) const {
    Sha256 h;
    h.update(adapter_.name);
    h.update("\n");
    h.update(adapter_.encode_template);
    h.update("\n");
    h.update(adapter_.decode_template);
    h.update("\n");
    h.update(input_digest_);
    h.update("\nqp=" + std::to_string(qp));
    h.update("\nqpif=" + (qpif_frame ? std::to_string(*qpif_frame) : std::string("none")));
    h.update("\ngeom=" + std::to_string(format_.width) + "x" + std::to_string(format_.height) +
             "@" + std::to_string(format_.bit_depth) + "/" + format_.fps.str() + "/" +
             std::to_string(format_.frame_count));
    return h.hex_digest();
}

RunResult CommandBackend::run(int qp, std::optional<int> qpif_frame, bool bypass_cache,
                              bool need_decoded) {
    const std::string key = cache_key(qp, qpif_frame);
    auto lock = run_locks().acquire(key);

    if (!bypass_cache && cache_) {
        if (auto hit = cache_->lookup(key, need_decoded)) {
            if (counters_) counters_->cache_hits.fetch_add(1);
            return *hit;
        }
    }

    const fs::path scratch = workdir_ / "scratch" / key.substr(0, 16);
    fs::create_directories(scratch);
    const fs::path bitstream = scratch / "bitstream.bin";
    const fs::path decoded = scratch / "decoded.yuv";

    std::map<std::string, std::string> values = {
        {"input", input_.string()},
        {"output", bitstream.string()},
        {"qp", std::to_string(qp)},
        {"width", std::to_string(format_.width)},
        {"height", std::to_string(format_.height)},
        {"fps", format_.fps.str()},
        {"frames", std::to_string(format_.frame_count)},
        {"bitdepth", std::to_string(format_.bit_depth)},
    };
    if (qpif_frame) values["qpif_frame"] = std::to_string(*qpif_frame);

    if (counters_) counters_->encode_calls.fetch_add(1);
    const auto encode_argv = expand_command_template(adapter_.encode_template, values,
                                                     {"qpif_frame"});
    const CommandResult enc = run_command(encode_argv);
    if (enc.exit_code != 0)
        throw ProcessError("encoder '" + adapter_.name + "' exited with " +
                               std::to_string(enc.exit_code),
                           enc.exit_code, enc.output);

    values["input"] = bitstream.string();
    values["output"] = decoded.string();
    const auto decode_argv = expand_command_template(adapter_.decode_template, values,
                                                     {"qpif_frame"});
    const CommandResult dec = run_command(decode_argv);
    if (dec.exit_code != 0)
        throw ProcessError("decoder '" + adapter_.name + "' exited with " +
                               std::to_string(dec.exit_code),
                           dec.exit_code, dec.output);

    const std::int64_t expected = format_.frame_size_bytes() * format_.frame_count;
    const std::int64_t actual = static_cast<std::int64_t>(fs::file_size(decoded));
    if (actual != expected)
        throw FormatError("adapter '" + adapter_.name + "' produced " + std::to_string(actual) +
                          " decoded bytes, expected " + std::to_string(expected));

    RunResult result;
    result.qp = qp;
    result.qpif_frame = qpif_frame;
    result.bitstream_bytes = static_cast<std::int64_t>(fs::file_size(bitstream));
    result.bitrate_kbps = compute_bitrate(result.bitstream_bytes, format_.frame_count, format_.fps);
    result.encode_log = enc.output;
    result.cache_key = key;
    if (cache_) {
        cache_->store(key, result, bitstream, decoded);
        std::error_code ec;
        fs::remove_all(scratch, ec);
    } else {
        result.decoded_path = decoded;
    }
    return result;
}

namespace {

constexpr int kQpMin = 0;
constexpr int kQpMax = 63;
constexpr double kUndershootFraction = 0.95;
constexpr int kSwitchFrameBudget = 7;  // interpolated guess + six secant refinements

double probe_rate(EncodeBackend& backend, int qp, std::map<int, double>& seen) {
    if (auto it = seen.find(qp); it != seen.end()) return it->second;
    const double rate = backend.run(qp, std::nullopt, false, false).bitrate_kbps;
    seen[qp] = rate;
    return rate;
}

// Re-probe a monotonicity violation once (bypassing the cache); a second
// violation is an adapter defect.
double reprobe_rate(EncodeBackend& backend, int qp, std::map<int, double>& seen) {
    const double rate = backend.run(qp, std::nullopt, true, false).bitrate_kbps;
    seen[qp] = rate;
    return rate;
}

}  // namespace

RunResult hit_target_rate(EncodeBackend& backend, double target_kbps, double tolerance_pct) {
    if (!(target_kbps > 0.0)) throw ConfigError("target rate must be positive");
    if (!(tolerance_pct > 0.0)) throw ConfigError("tolerance must be positive");
    const double ceiling = (1.0 + tolerance_pct / 100.0) * target_kbps;
    const double floor = kUndershootFraction * target_kbps;
    const std::int64_t frames = backend.frame_count();

    std::map<int, double> rates;
    auto finish = [&](int qp, std::optional<int> qpif, bool accepted) {
        RunResult final = backend.run(qp, qpif, false, true);
        final.within_tolerance = accepted;
        return final;
    };

    const double r_min_qp = probe_rate(backend, kQpMin, rates);
    if (r_min_qp < floor)
        throw DataError("target " + std::to_string(target_kbps) + " kbps unreachable: QP " +
                        std::to_string(kQpMin) + " only reaches " + std::to_string(r_min_qp) +
                        " kbps");
    if (r_min_qp <= ceiling) return finish(kQpMin, std::nullopt, true);

    const double r_max_qp = probe_rate(backend, kQpMax, rates);
    if (r_max_qp > ceiling)
        throw DataError("target " + std::to_string(target_kbps) + " kbps unreachable: QP " +
                        std::to_string(kQpMax) + " still produces " + std::to_string(r_max_qp) +
                        " kbps");

    // Phase 1: bisect to the adjacent pair with R(qa) > ceiling >= R(qa+1).
    int lo = kQpMin;
    int hi = kQpMax;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        double r_mid = probe_rate(backend, mid, rates);
        if (r_mid > rates[lo] || r_mid < rates[hi]) {
            r_mid = reprobe_rate(backend, mid, rates);
            if (r_mid > rates[lo] || r_mid < rates[hi])
                throw DataError("adapter rate is not monotone in QP around QP " +
                                std::to_string(mid));
        }
        if (r_mid > ceiling)
            lo = mid;
        else
            hi = mid;
    }
    const int qa = lo;
    const int qb = hi;
    const double rate_a = rates[qa];
    const double rate_b = rates[qb];
    if (rate_b >= floor) return finish(qb, std::nullopt, true);

    if (!backend.supports_qpif()) {
        // Nearest-QP fallback, flagged out of tolerance.
        const int qp = std::abs(rate_a - target_kbps) < std::abs(rate_b - target_kbps) ? qa : qb;
        return finish(qp, std::nullopt, false);
    }

    // Phase 2: base QP qa switching to qa+1 at frame f; rate is modeled
    // linear in f, refined by secant steps.
    auto clamp_frame = [&](double f) {
        return static_cast<int>(std::lround(std::clamp(f, 0.0, static_cast<double>(frames))));
    };
    int f_cur = clamp_frame(static_cast<double>(frames) * (target_kbps - rate_b) /
                            (rate_a - rate_b));
    double f_prev = 0.0;
    double r_prev = rate_b;  // switching at frame 0 encodes everything at qa+1
    int best_f = f_cur;
    double best_err = std::numeric_limits<double>::infinity();
    for (int step = 0; step < kSwitchFrameBudget; ++step) {
        const double r_cur = backend.run(qa, f_cur, false, false).bitrate_kbps;
        if (r_cur >= floor && r_cur <= ceiling) return finish(qa, f_cur, true);
        if (std::abs(r_cur - target_kbps) < best_err) {
            best_err = std::abs(r_cur - target_kbps);
            best_f = f_cur;
        }
        double f_next;
        if (r_cur == r_prev) {
            f_next = f_cur + (r_cur > target_kbps ? -1.0 : 1.0);
        } else {
            f_next = f_cur + (target_kbps - r_cur) * (f_cur - f_prev) / (r_cur - r_prev);
        }
        f_prev = f_cur;
        r_prev = r_cur;
        f_cur = clamp_frame(f_next);
        if (f_cur == static_cast<int>(f_prev)) f_cur += r_cur > target_kbps ? -1 : 1;
        f_cur = std::clamp(f_cur, 0, static_cast<int>(frames));
    }
    return finish(qa, best_f, false);
}

const char* workflow_name(Workflow workflow) {
    switch (workflow) {
        case Workflow::Anchor: return "anchor";
        case Workflow::Pre: return "pre";
        case Workflow::Post: return "post";
    }
    return "?";
}

Workflow parse_workflow(const std::string& name) {
    if (name == "anchor") return Workflow::Anchor;
    if (name == "pre") return Workflow::Pre;
    if (name == "post") return Workflow::Post;
    throw ConfigError("unknown workflow '" + name + "'");
}

namespace {

FilterHook parse_hook(const nlohmann::json& j) {
    FilterHook hook;
    const std::string kind = j.value("kind", "builtin-denoise");
    if (kind == "builtin-denoise") {
        hook.kind = FilterHook::Kind::BuiltinDenoise;
        const std::string dk = j.value("denoise_kind", "temporal-moving-average");
        hook.denoise.kind = dk == "spatiotemporal-gaussian" ? DenoiseKind::SpatiotemporalGaussian
                                                            : DenoiseKind::TemporalMovingAverage;
        hook.denoise.window = j.value("window", 5);
        if (j.contains("weights")) hook.denoise.weights = j["weights"].get<std::vector<double>>();
        hook.denoise.spatial_sigma = j.value("spatial_sigma", 1.0);
        hook.denoise.validate();
    } else if (kind == "external-command") {
        hook.kind = FilterHook::Kind::ExternalCommand;
        hook.command_template = j.at("command").get<std::string>();
        if (hook.command_template.find("{input}") == std::string::npos ||
            hook.command_template.find("{output}") == std::string::npos)
            throw ConfigError("external filter command must use {input} and {output}");
    } else {
        throw ConfigError("unknown filter hook kind '" + kind + "'");
    }
    return hook;
}

}  // namespace

BenchmarkSpec load_benchmark_spec(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read benchmark spec " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad benchmark spec JSON in " + path.string() + ": " + e.what());
    }

    BenchmarkSpec spec;
    const auto& adapter = j.at("adapter");
    spec.adapter.name = adapter.at("name").get<std::string>();
    spec.adapter.encode_template = adapter.at("encode").get<std::string>();
    spec.adapter.decode_template = adapter.at("decode").get<std::string>();
    spec.adapter.supports_qpif = adapter.value("supports_qpif", true);
    spec.adapter.validate();

    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        const fs::path candidate(p);
        return candidate.is_absolute() ? candidate : base / candidate;
    };

    for (const auto& s : j.at("sequences")) {
        SequenceSpec seq;
        seq.id = s.at("id").get<std::string>();
        seq.path = resolve(s.at("path").get<std::string>());
        if (seq.path.extension() != ".y4m") {
            seq.format.width = s.at("width").get<int>();
            seq.format.height = s.at("height").get<int>();
            seq.format.bit_depth = s.value("bit_depth", 8);
            seq.format.fps = Fps::parse(s.value("fps", std::string("30")));
            seq.format.frame_count = s.value("frames", 0);
        }
        spec.sequences.push_back(seq);
    }
    if (spec.sequences.empty()) throw ConfigError("benchmark spec has no sequences");

    for (const auto& r : j.at("rate_plans")) {
        RatePlan plan;
        plan.sequence_id = r.at("sequence").get<std::string>();
        plan.targets_kbps = r.at("targets_kbps").get<std::vector<double>>();
        plan.tolerance_pct = r.value("tolerance_pct", 3.0);
        plan.validate();
        spec.rate_plans.push_back(plan);
    }

    for (const auto& w : j.at("workflows")) spec.workflows.push_back(parse_workflow(w.get<std::string>()));
    if (spec.workflows.empty()) throw ConfigError("benchmark spec has no workflows");

    spec.metrics = j.at("metrics").get<std::vector<std::string>>();
    if (spec.metrics.empty()) throw ConfigError("benchmark spec has no metrics");

    if (j.contains("pre_hook")) spec.pre_hook = parse_hook(j["pre_hook"]);
    if (j.contains("post_hook")) spec.post_hook = parse_hook(j["post_hook"]);
    if (j.contains("niqe_model")) spec.niqe_model = resolve(j["niqe_model"].get<std::string>());
    if (j.contains("imports")) {
        for (const auto& imp : j["imports"]) {
            ImportSpec is;
            is.metric_id = imp.at("metric").get<std::string>();
            is.path = resolve(imp.at("path").get<std::string>());
            is.workflow = imp.value("workflow", "");
            spec.imports.push_back(is);
        }
    }
    if (j.contains("workdir")) spec.workdir = resolve(j["workdir"].get<std::string>());
    spec.jobs = j.value("jobs", 0);
    spec.retain_decoded = j.value("retain_decoded", true);
    spec.pooling = parse_pooling(j.value("pooling", std::string("mean")));
    return spec;
}

namespace {

struct ResolvedSequence {
    SequenceSpec spec;
    VideoFormat format;       // frame_count resolved
    fs::path filtered_path;   // pre-workflow input, when used
};

void apply_filter_hook(const FilterHook& hook, const fs::path& input, const VideoFormat& format,
                       const fs::path& output) {
    if (hook.kind == FilterHook::Kind::BuiltinDenoise) {
        VideoFormat in_fmt = format;
        const auto reader = open_video(input, in_fmt);
        YuvWriter writer(output, reader->format());
        denoise(*reader, writer, hook.denoise);
        return;
    }
    const std::map<std::string, std::string> values = {
        {"input", input.string()},
        {"output", output.string()},
        {"width", std::to_string(format.width)},
        {"height", std::to_string(format.height)},
        {"fps", format.fps.str()},
        {"frames", std::to_string(format.frame_count)},
        {"bitdepth", std::to_string(format.bit_depth)},
    };
    const auto argv = expand_command_template(hook.command_template, values);
    const CommandResult res = run_command(argv);
    if (res.exit_code != 0)
        throw ProcessError("filter command exited with " + std::to_string(res.exit_code),
                           res.exit_code, res.output);
    const std::int64_t expected = format.frame_size_bytes() * format.frame_count;
    if (!fs::exists(output) || static_cast<std::int64_t>(fs::file_size(output)) != expected)
        throw FormatError("filter output has wrong geometry: " + output.string());
}

SequenceScore score_metric(const std::string& metric, const VideoReader& original,
                           const VideoReader& output, const NiqeModel* model, Pooling pooling) {
    SequenceScore score;
    if (metric == "psnr-y" || metric == "psnr") {
        score = psnr_sequence(original, output, PlaneId::Y, pooling);
    } else if (metric == "psnr-u") {
        score = psnr_sequence(original, output, PlaneId::U, pooling);
    } else if (metric == "psnr-v") {
        score = psnr_sequence(original, output, PlaneId::V, pooling);
    } else if (metric == "ssim") {
        score = ssim_sequence(original, output);
    } else if (metric == "ms-ssim") {
        score = ms_ssim_sequence(original, output);
    } else if (metric == "piqe") {
        score = nr_sequence(output, NrMetric::Piqe);
    } else if (metric == "niqe") {
        score = nr_sequence(output, NrMetric::Niqe, model);
    } else if (metric == "aqi") {
        score = nr_sequence(output, NrMetric::Aqi);
    } else {
        throw ConfigError("unknown metric '" + metric + "' (imported metrics join via imports)");
    }
    score.metric_id = metric;
    return score;
}

std::string rate_label_of(std::size_t index) { return "Rate" + std::to_string(index + 1); }

}  // namespace

void BenchmarkResult::rebuild_curves() {
    curves.clear();
    for (const BenchmarkCell& cell : cells) {
        if (cell.failed()) continue;
        for (const SequenceScore& score : cell.scores) {
            const CurveKey key{cell.sequence_id, workflow_name(cell.workflow), score.metric_id};
            RQCurve& curve = curves[key];
            curve.label = key.workflow;
            curve.metric_id = score.metric_id;
            curve.points.push_back(RQPoint{cell.run.bitrate_kbps, score.pooled});
        }
    }
    for (auto& [key, curve] : curves)
        std::sort(curve.points.begin(), curve.points.end(),
                  [](const RQPoint& a, const RQPoint& b) { return a.rate_kbps < b.rate_kbps; });
}

BenchmarkResult run_benchmark(const BenchmarkSpec& spec) {
    spec.adapter.validate();
    if (spec.workdir.empty()) throw ConfigError("benchmark needs a working directory");
    fs::create_directories(spec.workdir);
    EncodeCache cache(spec.workdir / "cache");
    InvocationCounters counters;

    const bool has_pre = std::count(spec.workflows.begin(), spec.workflows.end(), Workflow::Pre) > 0;
    const bool has_post =
        std::count(spec.workflows.begin(), spec.workflows.end(), Workflow::Post) > 0;
    if (has_pre && !spec.pre_hook) throw ConfigError("pre workflow needs a pre_hook");
    if (has_post && !spec.post_hook) throw ConfigError("post workflow needs a post_hook");

    NiqeModel model;
    const NiqeModel* model_ptr = nullptr;
    if (std::count(spec.metrics.begin(), spec.metrics.end(), "niqe") > 0) {
        if (spec.niqe_model.empty()) throw ConfigError("niqe metric needs a niqe_model path");
        model = load_niqe_model(spec.niqe_model);
        model_ptr = &model;
    }

    // Resolve geometry and prepare pre-filtered inputs up front.
    std::map<std::string, ResolvedSequence> sequences;
    for (const SequenceSpec& seq : spec.sequences) {
        ResolvedSequence resolved;
        resolved.spec = seq;
        std::optional<VideoFormat> hint;
        if (seq.path.extension() != ".y4m") hint = seq.format;
        const auto reader = open_video(seq.path, hint);
        resolved.format = reader->format();
        if (has_pre) {
            const fs::path dir = spec.workdir / "filtered";
            fs::create_directories(dir);
            resolved.filtered_path = dir / (seq.id + "_pre.yuv");
            apply_filter_hook(*spec.pre_hook, seq.path, resolved.format, resolved.filtered_path);
        }
        sequences.emplace(seq.id, std::move(resolved));
    }

    // Full cross product of cells in deterministic order.
    BenchmarkResult result;
    struct CellJob {
        std::string sequence_id;
        std::size_t rate_index = 0;
        double target = 0.0;
        double tolerance = 3.0;
        Workflow workflow = Workflow::Anchor;
    };
    std::vector<CellJob> jobs;
    for (const SequenceSpec& seq : spec.sequences) {
        const RatePlan* plan = nullptr;
        for (const RatePlan& p : spec.rate_plans)
            if (p.sequence_id == seq.id) plan = &p;
        if (!plan) throw ConfigError("no rate plan for sequence '" + seq.id + "'");
        for (std::size_t r = 0; r < plan->targets_kbps.size(); ++r)
            for (Workflow w : {Workflow::Anchor, Workflow::Pre, Workflow::Post})
                if (std::count(spec.workflows.begin(), spec.workflows.end(), w) > 0)
                    jobs.push_back(CellJob{seq.id, r, plan->targets_kbps[r], plan->tolerance_pct, w});
    }
    result.cells.resize(jobs.size());

    auto process_cell = [&](const CellJob& job, BenchmarkCell& cell) {
        cell.sequence_id = job.sequence_id;
        cell.rate_label = rate_label_of(job.rate_index);
        cell.target_kbps = job.target;
        cell.workflow = job.workflow;
        const ResolvedSequence& seq = sequences.at(job.sequence_id);
        try {
            const fs::path input =
                job.workflow == Workflow::Pre ? seq.filtered_path : seq.spec.path;
            CommandBackend backend(spec.adapter, seq.format, input, spec.workdir, &cache,
                                   &counters);
            cell.run = hit_target_rate(backend, job.target, job.tolerance);

            fs::path output_video = cell.run.decoded_path;
            if (job.workflow == Workflow::Post) {
                const fs::path dir = spec.workdir / "post";
                fs::create_directories(dir);
                const fs::path post_out =
                    dir / (job.sequence_id + "_" + cell.rate_label + ".yuv");
                apply_filter_hook(*spec.post_hook, cell.run.decoded_path, seq.format, post_out);
                output_video = post_out;
            }

            // Metric references are always the original, unfiltered source.
            std::optional<VideoFormat> hint;
            if (seq.spec.path.extension() != ".y4m") hint = seq.format;
            const auto original = open_video(seq.spec.path, hint);
            VideoFormat out_fmt = seq.format;
            out_fmt.frame_count = 0;
            const YuvReader output(output_video, out_fmt);
            for (const std::string& metric : spec.metrics)
                cell.scores.push_back(score_metric(metric, *original, output, model_ptr,
                                                   spec.pooling));
            if (!spec.retain_decoded) cache.prune_media(cell.run.cache_key);
        } catch (const Error& e) {
            cell.error = e.what();
        }
    };

    int worker_count = spec.jobs > 0 ? spec.jobs
                                     : static_cast<int>(std::thread::hardware_concurrency());
    worker_count = std::max(1, std::min<int>(worker_count, static_cast<int>(jobs.size())));
    if (worker_count == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) process_cell(jobs[i], result.cells[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(worker_count));
        for (int w = 0; w < worker_count; ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= jobs.size()) return;
                    process_cell(jobs[i], result.cells[i]);
                }
            });
        }
        for (std::thread& t : workers) t.join();
    }

    // Imported metrics join the native scores per cell.
    for (const ImportSpec& imp : spec.imports) {
        const ImportedScores imported = import_scores(imp.path, imp.metric_id);
        for (BenchmarkCell& cell : result.cells) {
            if (cell.failed()) continue;
            if (!imp.workflow.empty() && imp.workflow != workflow_name(cell.workflow)) continue;
            const auto it = imported.cells.find({cell.sequence_id, cell.rate_label});
            if (it == imported.cells.end()) continue;
            SequenceScore score = it->second;
            const std::int64_t frames = sequences.at(cell.sequence_id).format.frame_count;
            if (!score.per_frame.empty() &&
                static_cast<std::int64_t>(score.per_frame.size()) != frames) {
                result.failures.push_back("import " + imp.metric_id + " for " + cell.sequence_id +
                                          "/" + cell.rate_label + ": " +
                                          std::to_string(score.per_frame.size()) +
                                          " frame rows, sequence has " + std::to_string(frames));
                continue;
            }
            cell.scores.push_back(std::move(score));
        }
    }

    for (const BenchmarkCell& cell : result.cells)
        if (cell.failed())
            result.failures.push_back(cell.sequence_id + "/" + cell.rate_label + "/" +
                                      workflow_name(cell.workflow) + ": " + cell.error);
    result.encode_calls = counters.encode_calls.load();
    result.cache_hits = counters.cache_hits.load();
    result.rebuild_curves();
    return result;
}

namespace {

nlohmann::ordered_json score_to_json(const SequenceScore& score) {
    nlohmann::ordered_json j;
    j["metric"] = score.metric_id;
    j["plane"] = score.plane;
    j["pooled"] = score.pooled;
    j["pooling"] = pooling_name(score.pooling);
    nlohmann::ordered_json values = nlohmann::ordered_json::array();
    for (const FrameScore& f : score.per_frame) values.push_back(f.value);
    j["per_frame"] = values;
    return j;
}

SequenceScore score_from_json(const nlohmann::json& j) {
    SequenceScore score;
    score.metric_id = j.value("metric", "");
    score.plane = j.value("plane", "");
    score.pooled = j.value("pooled", 0.0);
    score.pooling = parse_pooling(j.value("pooling", std::string("mean")));
    std::int64_t index = 0;
    if (j.contains("per_frame"))
        for (const auto& v : j["per_frame"])
            score.per_frame.push_back(FrameScore{index++, v.get<double>()});
    return score;
}

}  // namespace

void save_benchmark_result(const BenchmarkResult& result, const fs::path& path) {
    nlohmann::ordered_json j;
    j["cells"] = nlohmann::ordered_json::array();
    for (const BenchmarkCell& cell : result.cells) {
        nlohmann::ordered_json c;
        c["sequence"] = cell.sequence_id;
        c["rate_label"] = cell.rate_label;
        c["target_kbps"] = cell.target_kbps;
        c["workflow"] = workflow_name(cell.workflow);
        if (cell.failed()) {
            c["error"] = cell.error;
        } else {
            c["qp"] = cell.run.qp;
            if (cell.run.qpif_frame)
                c["qpif_frame"] = *cell.run.qpif_frame;
            else
                c["qpif_frame"] = nullptr;
            c["bitstream_bytes"] = cell.run.bitstream_bytes;
            c["bitrate_kbps"] = cell.run.bitrate_kbps;
            c["within_tolerance"] = cell.run.within_tolerance;
            c["cache_key"] = cell.run.cache_key;
            c["scores"] = nlohmann::ordered_json::array();
            for (const SequenceScore& score : cell.scores) c["scores"].push_back(score_to_json(score));
        }
        j["cells"].push_back(c);
    }
    j["failures"] = result.failures;
    j["encode_calls"] = result.encode_calls;
    j["cache_hits"] = result.cache_hits;

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

BenchmarkResult load_benchmark_result(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad result JSON in " + path.string() + ": " + e.what());
    }
    BenchmarkResult result;
    for (const auto& c : j.at("cells")) {
        BenchmarkCell cell;
        cell.sequence_id = c.at("sequence").get<std::string>();
        cell.rate_label = c.at("rate_label").get<std::string>();
        cell.target_kbps = c.value("target_kbps", 0.0);
        cell.workflow = parse_workflow(c.at("workflow").get<std::string>());
        if (c.contains("error")) {
            cell.error = c["error"].get<std::string>();
        } else {
            cell.run.qp = c.value("qp", -1);
            if (c.contains("qpif_frame") && !c["qpif_frame"].is_null())
                cell.run.qpif_frame = c["qpif_frame"].get<int>();
            cell.run.bitstream_bytes = c.value("bitstream_bytes", static_cast<std::int64_t>(0));
            cell.run.bitrate_kbps = c.value("bitrate_kbps", 0.0);
            cell.run.within_tolerance = c.value("within_tolerance", true);
            cell.run.cache_key = c.value("cache_key", "");
            if (c.contains("scores"))
                for (const auto& s : c["scores"]) cell.scores.push_back(score_from_json(s));
        }
        result.cells.push_back(std::move(cell));
    }
    if (j.contains("failures"))
        result.failures = j["failures"].get<std::vector<std::string>>();
    result.encode_calls = j.value("encode_calls", static_cast<std::int64_t>(0));
    result.cache_hits = j.value("cache_hits", static_cast<std::int64_t>(0));
    result.rebuild_curves();
    return result;
}

ImportedScores import_scores(const fs::path& path, const std::string& metric_id,
                             std::int64_t expected_frames) {
    const CsvTable table = read_csv(path);
    const std::string context = "import " + path.string();
    const int col_seq = table.require_column("sequence_id", context);
    const int col_rate = table.require_column("rate_label", context);
    const int col_metric = table.require_column("metric", context);
    const int col_value = table.require_column("value", context);
    const int col_frame = table.column("frame");

    ImportedScores imported;
    imported.metric_id = metric_id;
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::int64_t, double>>>
        frame_rows;
    for (const auto& row : table.rows) {
        if (row.size() < table.header.size())
            throw FormatError(context + ": short row with " + std::to_string(row.size()) +
                              " fields");
        if (row[static_cast<std::size_t>(col_metric)] != metric_id) continue;
        const std::pair<std::string, std::string> key{row[static_cast<std::size_t>(col_seq)],
                                                      row[static_cast<std::size_t>(col_rate)]};
        const double value = std::stod(row[static_cast<std::size_t>(col_value)]);
        const std::string frame_field =
            col_frame >= 0 ? row[static_cast<std::size_t>(col_frame)] : "";
        if (frame_field.empty()) {
            SequenceScore score;
            score.metric_id = metric_id;
            score.pooled = value;
            imported.cells[key] = std::move(score);
        } else {
            frame_rows[key].emplace_back(std::stoll(frame_field), value);
        }
    }
    for (auto& [key, rows] : frame_rows) {
        std::sort(rows.begin(), rows.end());
        SequenceScore score;
        score.metric_id = metric_id;
        double acc = 0.0;
        for (const auto& [frame, value] : rows) {
            score.per_frame.push_back(FrameScore{frame, value});
            acc += value;
        }
        score.pooled = acc / static_cast<double>(rows.size());
        if (expected_frames > 0 && static_cast<std::int64_t>(rows.size()) != expected_frames)
            throw FormatError(context + ": " + key.first + "/" + key.second + " has " +
                              std::to_string(rows.size()) + " frame rows, expected " +
                              std::to_string(expected_frames));
        imported.cells[key] = std::move(score);
    }
    if (imported.cells.empty())
        throw FormatError(context + ": no rows for metric '" + metric_id + "'");
    return imported;
}

}  // namespace llb
