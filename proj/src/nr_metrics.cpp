#include "llbench/nr_metrics.hpp"

#include "llbench/error.hpp"

namespace llb {

const char* nr_metric_name(NrMetric metric) {
    switch (metric) {
        case NrMetric::Piqe: return "piqe";
        case NrMetric::Niqe: return "niqe";
        case NrMetric::Aqi: return "aqi";
    }
    return "?";
}

NrMetric parse_nr_metric(const std::string& name) {
    if (name == "piqe") return NrMetric::Piqe;
    if (name == "niqe") return NrMetric::Niqe;
    if (name == "aqi") return NrMetric::Aqi;
    throw ConfigError("unknown NR metric '" + name + "'");
}

SequenceScore nr_sequence(const VideoReader& video, NrMetric metric, const NiqeModel* model,
                          const PiqeConfig& piqe, const AqiConfig& aqi) {
    if (metric == NrMetric::Niqe && model == nullptr)
        throw ConfigError("NIQE needs a fitted model (fit-niqe --corpus ... --out model.json)");
    SequenceScore score;
    score.metric_id = nr_metric_name(metric);
    score.plane = "y";
    double acc = 0.0;
    for (std::int64_t i = 0; i < video.frame_count(); ++i) {
        const Frame frame = video.read_frame(i);
        const PlaneF64 gray = luma_as_gray255(frame);
        double v = 0.0;
        switch (metric) {
            case NrMetric::Piqe: v = piqe_score(gray, piqe).score; break;
            case NrMetric::Niqe: v = niqe_score(gray, *model); break;
            case NrMetric::Aqi: v = aqi_score(gray, aqi).anisotropy; break;
        }
        score.per_frame.push_back(FrameScore{i, v});
        acc += v;
    }
    score.pooled = acc / static_cast<double>(video.frame_count());
    return score;
}

}  // namespace llb
