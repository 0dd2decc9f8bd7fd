#pragma once

#include <string>

#include "llbench/aqi.hpp"
#include "llbench/niqe.hpp"
#include "llbench/piqe.hpp"
#include "llbench/scores.hpp"
#include "llbench/video_io.hpp"

namespace llb {

enum class NrMetric { Piqe, Niqe, Aqi };

const char* nr_metric_name(NrMetric metric);
NrMetric parse_nr_metric(const std::string& name);

// Per-frame NR scores on luma (rescaled to [0, 255] reals regardless of
// bit depth), pooled by arithmetic mean. NIQE requires a model.
SequenceScore nr_sequence(const VideoReader& video, NrMetric metric,
                          const NiqeModel* model = nullptr, const PiqeConfig& piqe = {},
                          const AqiConfig& aqi = {});

}  // namespace llb
