#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llbench/video_io.hpp"

namespace llb {

// Per-probe temporal intensity statistics.
struct NoiseProfile {
    std::vector<ProbeLocation> probes;
    std::vector<std::vector<double>> series;    // normalized luma, one row per probe
    std::vector<std::vector<double>> smoothed;  // moving-average series
    std::vector<double> mae;
    int window = 20;
};

// Mean absolute elementwise difference.
double mae(std::span<const double> series, std::span<const double> smoothed);

// Normalized luma time series at each probe, smoothed with a centered
// moving average of `window` frames (the window slides inward at the
// sequence edges so every mean covers a full window), and the per-probe
// MAE between the raw and smoothed series.
NoiseProfile temporal_profile(const VideoReader& video, const std::vector<ProbeLocation>& probes,
                              int window = 20);

enum class DenoiseKind { TemporalMovingAverage, SpatiotemporalGaussian };

struct DenoiseConfig {
    DenoiseKind kind = DenoiseKind::TemporalMovingAverage;
    int window = 5;                // frames; odd
    std::vector<double> weights;   // optional per-tap weights, nonnegative, sum 1
    double spatial_sigma = 1.0;    // pixels, spatiotemporal only

    void validate() const;
};

// Filters all three planes and writes the result; output is re-quantized
// to the source bit depth by round-half-up. Edge frames use the truncated
// window with renormalized weights.
void denoise(const VideoReader& input, YuvWriter& output, const DenoiseConfig& config);

struct ProfileDelta {
    std::vector<double> delta_mae;  // after - before, per probe
    int improved = 0;               // probes with lower MAE after
    int worsened = 0;
};

ProfileDelta profile_delta(const NoiseProfile& before, const NoiseProfile& after);

// 3x3 probe grid at the quarter points of the region (whole frame when
// absent), mirroring background-point selection.
struct ProbeRegion {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
};
std::vector<ProbeLocation> default_probe_grid(const VideoFormat& format,
                                              const std::optional<ProbeRegion>& region = {});

// Probe list JSON: [{"x":..,"y":..,"label":..}, ...]
std::vector<ProbeLocation> load_probes_json(const std::filesystem::path& path);

}  // namespace llb
