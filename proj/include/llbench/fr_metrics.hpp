#pragma once

#include "llbench/plane.hpp"
#include "llbench/scores.hpp"
#include "llbench/video_io.hpp"

namespace llb {

// PSNR of identical planes is clamped to this instead of +inf so that
// rate-quality curves stay integrable.
inline constexpr double kPsnrClampDb = 100.0;

double mse_plane(const PlaneU16& ref, const PlaneU16& dist);

// 10*log10(peak^2/MSE), clamped at kPsnrClampDb when MSE is zero.
double psnr_plane(const PlaneU16& ref, const PlaneU16& dist, int peak);

struct SsimConfig {
    bool auto_downsample = true;  // f = max(1, round(min(H,W)/256)) block mean
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

// Single-scale SSIM on one plane pair, 11x11 Gaussian window (sigma 1.5),
// valid-region windowing, C1=(k1*peak)^2, C2=(k2*peak)^2.
double ssim_frame(const PlaneU16& ref, const PlaneU16& dist, int peak,
                  const SsimConfig& config = {});

// 5-scale MS-SSIM, contrast/structure at every scale, luminance only at the
// coarsest, exponents {0.0448, 0.2856, 0.3001, 0.2363, 0.1333}.
double ms_ssim_frame(const PlaneU16& ref, const PlaneU16& dist, int peak);

enum class FrMetric { Psnr, Ssim, MsSsim };

const char* fr_metric_name(FrMetric metric);
FrMetric parse_fr_metric(const std::string& name);

SequenceScore psnr_sequence(const VideoReader& ref, const VideoReader& dist, PlaneId plane,
                            Pooling pooling = Pooling::MeanOfFrameScores);

// SSIM family runs on luma only.
SequenceScore ssim_sequence(const VideoReader& ref, const VideoReader& dist,
                            const SsimConfig& config = {});
SequenceScore ms_ssim_sequence(const VideoReader& ref, const VideoReader& dist);

SequenceScore fr_sequence(FrMetric metric, const VideoReader& ref, const VideoReader& dist,
                          PlaneId plane = PlaneId::Y, Pooling pooling = Pooling::MeanOfFrameScores);

}  // namespace llb
