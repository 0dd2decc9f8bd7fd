#pragma once

#include <string>
#include <vector>

#include "llbench/error.hpp"

namespace llb {

struct RQPoint {
    double rate_kbps = 0.0;
    double quality = 0.0;
};

// Rate-quality points for one method, rates strictly increasing. BD
// computation additionally requires quality strictly monotone in rate,
// in either direction.
struct RQCurve {
    std::string label;
    std::string metric_id;
    std::vector<RQPoint> points;

    void validate() const;  // rates positive and strictly increasing, finite quality
};

enum class BdMethod { CubicFit, Pchip };

const char* bd_method_name(BdMethod method);
BdMethod parse_bd_method(const std::string& name);

// Bjontegaard deltas. bd_rate fills bd_rate_pct with the overlap interval
// in quality units; bd_quality fills bd_quality with the overlap interval
// in log10(rate) units. Negative bd_rate_pct means the test saves bitrate.
struct BdResult {
    double bd_rate_pct = 0.0;
    double bd_quality = 0.0;
    double overlap_lo = 0.0;
    double overlap_hi = 0.0;
    BdMethod method = BdMethod::CubicFit;
};

BdResult bd_rate(const RQCurve& anchor, const RQCurve& test, BdMethod method = BdMethod::CubicFit,
                 int min_points = 4);
BdResult bd_quality(const RQCurve& anchor, const RQCurve& test,
                    BdMethod method = BdMethod::CubicFit, int min_points = 4);

struct MonotonicityReport {
    bool strictly_increasing = false;
    double spearman = 0.0;
    bool spearman_defined = false;  // false for constant quality
};

MonotonicityReport check_monotonicity(const RQCurve& curve);

}  // namespace llb
