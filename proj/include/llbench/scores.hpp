#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace llb {

struct FrameScore {
    std::int64_t frame_index = 0;
    double value = 0.0;
};

enum class Pooling {
    MeanOfFrameScores,  // arithmetic mean of per-frame metric values (default)
    PsnrOfMeanMse,      // 10*log10(peak^2 / mean per-frame MSE); PSNR only
};

const char* pooling_name(Pooling pooling);
Pooling parse_pooling(const std::string& name);

// Per-frame values plus the pooled value for one (sequence, metric) pair.
struct SequenceScore {
    std::string metric_id;
    std::string plane;  // "y"/"u"/"v", empty for luma-only NR metrics
    std::vector<FrameScore> per_frame;
    double pooled = 0.0;
    Pooling pooling = Pooling::MeanOfFrameScores;
};

}  // namespace llb
