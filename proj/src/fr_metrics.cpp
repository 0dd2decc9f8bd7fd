#include "llbench/fr_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "llbench/error.hpp"

namespace llb {

namespace {

void require_same_size(const PlaneU16& a, const PlaneU16& b) {
    if (!a.same_size(b))
        throw FormatError("plane dimensions differ: " + std::to_string(a.width()) + "x" +
                          std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                          std::to_string(b.height()));
}

std::vector<double> gaussian_taps(int size, double sigma) {
    std::vector<double> taps(static_cast<std::size_t>(size));
    const double center = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - center;
        taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += taps[static_cast<std::size_t>(i)];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

// Separable valid-region convolution; output is (W-K+1) x (H-K+1).
PlaneF64 filter_valid(const PlaneF64& in, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int out_w = in.width() - k + 1;
    const int out_h = in.height() - k + 1;
    PlaneF64 horiz(out_w, in.height());
    for (int y = 0; y < in.height(); ++y) {
        const double* src = in.row(y);
        double* dst = horiz.row(y);
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[static_cast<std::size_t>(i)] * src[x + i];
            dst[x] = acc;
        }
    }
    PlaneF64 out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        double* dst = out.row(y);
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[static_cast<std::size_t>(i)] * horiz.at(x, y + i);
            dst[x] = acc;
        }
    }
    return out;
}

PlaneF64 to_f64(const PlaneU16& in) {
    PlaneF64 out(in.width(), in.height());
    for (std::size_t i = 0; i < in.size(); ++i) out.data()[i] = in.data()[i];
    return out;
}

// f x f block mean; trailing partial blocks are dropped.
PlaneF64 block_mean(const PlaneF64& in, int f) {
    const int out_w = in.width() / f;
    const int out_h = in.height() / f;
    PlaneF64 out(out_w, out_h);
    const double inv = 1.0 / (f * f);
    for (int by = 0; by < out_h; ++by) {
        for (int bx = 0; bx < out_w; ++bx) {
            double acc = 0.0;
            for (int y = 0; y < f; ++y) {
                const double* row = in.row(by * f + y);
                for (int x = 0; x < f; ++x) acc += row[bx * f + x];
            }
            out.at(bx, by) = acc * inv;
        }
    }
    return out;
}

struct SsimStats {
    double mean_ssim = 0.0;
    double mean_cs = 0.0;
};

// Mean SSIM and mean contrast-structure over all valid window positions.
SsimStats ssim_stats(const PlaneF64& a, const PlaneF64& b, int window, double sigma, double c1,
                     double c2) {
    if (a.width() < window || a.height() < window)
        throw FormatError("plane " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                          " too small for the " + std::to_string(window) + "x" +
                          std::to_string(window) + " SSIM window");
    const std::vector<double> taps = gaussian_taps(window, sigma);

    PlaneF64 a_sq(a.width(), a.height());
    PlaneF64 b_sq(a.width(), a.height());
    PlaneF64 ab(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double av = a.data()[i];
        const double bv = b.data()[i];
        a_sq.data()[i] = av * av;
        b_sq.data()[i] = bv * bv;
        ab.data()[i] = av * bv;
    }

    const PlaneF64 mu_a = filter_valid(a, taps);
    const PlaneF64 mu_b = filter_valid(b, taps);
    const PlaneF64 s_aa = filter_valid(a_sq, taps);
    const PlaneF64 s_bb = filter_valid(b_sq, taps);
    const PlaneF64 s_ab = filter_valid(ab, taps);

    double ssim_acc = 0.0;
    double cs_acc = 0.0;
    const std::size_t n = mu_a.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double ma = mu_a.data()[i];
        const double mb = mu_b.data()[i];
        const double var_a = s_aa.data()[i] - ma * ma;
        const double var_b = s_bb.data()[i] - mb * mb;
        const double cov = s_ab.data()[i] - ma * mb;
        const double cs = (2.0 * cov + c2) / (var_a + var_b + c2);
        const double lum = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        ssim_acc += lum * cs;
        cs_acc += cs;
    }
    return SsimStats{ssim_acc / static_cast<double>(n), cs_acc / static_cast<double>(n)};
}

// 2x2 mean followed by stride-2 subsampling; odd trailing samples are dropped.
PlaneF64 dyadic_downsample(const PlaneF64& in) { return block_mean(in, 2); }

void require_same_format(const VideoReader& ref, const VideoReader& dist) {
    if (!ref.format().same_geometry(dist.format()))
        throw FormatError("reference and distorted videos have different geometry");
    if (ref.frame_count() != dist.frame_count())
        throw FormatError("frame count mismatch: " + std::to_string(ref.frame_count()) + " vs " +
                          std::to_string(dist.frame_count()));
}

}  // namespace

double mse_plane(const PlaneU16& ref, const PlaneU16& dist) {
    require_same_size(ref, dist);
    double acc = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = static_cast<double>(ref.data()[i]) - static_cast<double>(dist.data()[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(ref.size());
}

double psnr_plane(const PlaneU16& ref, const PlaneU16& dist, int peak) {
    const double mse = mse_plane(ref, dist);
    if (mse == 0.0) return kPsnrClampDb;
    return 10.0 * std::log10(static_cast<double>(peak) * peak / mse);
}

double ssim_frame(const PlaneU16& ref, const PlaneU16& dist, int peak, const SsimConfig& config) {
    require_same_size(ref, dist);
    PlaneF64 a = to_f64(ref);
    PlaneF64 b = to_f64(dist);
    if (config.auto_downsample) {
        const int f = std::max(1, static_cast<int>(std::lround(
                                      std::min(a.height(), a.width()) / 256.0)));
        if (f > 1) {
            a = block_mean(a, f);
            b = block_mean(b, f);
        }
    }
    const double c1 = (config.k1 * peak) * (config.k1 * peak);
    const double c2 = (config.k2 * peak) * (config.k2 * peak);
    return ssim_stats(a, b, config.window, config.sigma, c1, c2).mean_ssim;
}

double ms_ssim_frame(const PlaneU16& ref, const PlaneU16& dist, int peak) {
    require_same_size(ref, dist);
    static constexpr int kScales = 5;
    static constexpr double kWeights[kScales] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    if (std::min(ref.width(), ref.height()) < 11 * (1 << (kScales - 1)))
        throw FormatError("plane " + std::to_string(ref.width()) + "x" +
                          std::to_string(ref.height()) + " too small for 5-scale MS-SSIM (min 176)");
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);

    PlaneF64 a = to_f64(ref);
    PlaneF64 b = to_f64(dist);
    double result = 1.0;
    for (int scale = 0; scale < kScales; ++scale) {
        const SsimStats stats = ssim_stats(a, b, 11, 1.5, c1, c2);
        if (scale < kScales - 1) {
            result *= std::pow(stats.mean_cs, kWeights[scale]);
            a = dyadic_downsample(a);
            b = dyadic_downsample(b);
        } else {
            result *= std::pow(stats.mean_ssim, kWeights[scale]);
        }
    }
    return result;
}

const char* fr_metric_name(FrMetric metric) {
    switch (metric) {
        case FrMetric::Psnr: return "psnr";
        case FrMetric::Ssim: return "ssim";
        case FrMetric::MsSsim: return "ms-ssim";
    }
    return "?";
}

FrMetric parse_fr_metric(const std::string& name) {
    if (name == "psnr" || name == "psnr-y") return FrMetric::Psnr;
    if (name == "ssim") return FrMetric::Ssim;
    if (name == "ms-ssim" || name == "msssim") return FrMetric::MsSsim;
    throw ConfigError("unknown FR metric '" + name + "'");
}

SequenceScore psnr_sequence(const VideoReader& ref, const VideoReader& dist, PlaneId plane,
                            Pooling pooling) {
    require_same_format(ref, dist);
    const int peak = ref.format().max_value();
    SequenceScore score;
    score.metric_id = "psnr";
    score.plane = plane_name(plane);
    score.pooling = pooling;
    double mse_acc = 0.0;
    double psnr_acc = 0.0;
    for (std::int64_t i = 0; i < ref.frame_count(); ++i) {
        const Frame fr = ref.read_frame(i);
        const Frame fd = dist.read_frame(i);
        const double mse = mse_plane(fr.plane(plane), fd.plane(plane));
        const double db = mse == 0.0 ? kPsnrClampDb
                                     : 10.0 * std::log10(static_cast<double>(peak) * peak / mse);
        score.per_frame.push_back(FrameScore{i, db});
        mse_acc += mse;
        psnr_acc += db;
    }
    const double n = static_cast<double>(ref.frame_count());
    if (pooling == Pooling::MeanOfFrameScores) {
        score.pooled = psnr_acc / n;
    } else {
        const double mean_mse = mse_acc / n;
        score.pooled = mean_mse == 0.0
                           ? kPsnrClampDb
                           : 10.0 * std::log10(static_cast<double>(peak) * peak / mean_mse);
    }
    return score;
}

namespace {

SequenceScore luma_sequence(const char* metric_id, const VideoReader& ref, const VideoReader& dist,
                            const std::function<double(const PlaneU16&, const PlaneU16&, int)>& fn) {
    require_same_format(ref, dist);
    const int peak = ref.format().max_value();
    SequenceScore score;
    score.metric_id = metric_id;
    score.plane = "y";
    double acc = 0.0;
    for (std::int64_t i = 0; i < ref.frame_count(); ++i) {
        const Frame fr = ref.read_frame(i);
        const Frame fd = dist.read_frame(i);
        const double v = fn(fr.y, fd.y, peak);
        score.per_frame.push_back(FrameScore{i, v});
        acc += v;
    }
    score.pooled = acc / static_cast<double>(ref.frame_count());
    return score;
}

}  // namespace

SequenceScore ssim_sequence(const VideoReader& ref, const VideoReader& dist,
                            const SsimConfig& config) {
    return luma_sequence("ssim", ref, dist, [&](const PlaneU16& a, const PlaneU16& b, int peak) {
        return ssim_frame(a, b, peak, config);
    });
}

SequenceScore ms_ssim_sequence(const VideoReader& ref, const VideoReader& dist) {
    return luma_sequence("ms-ssim", ref, dist,
                         [](const PlaneU16& a, const PlaneU16& b, int peak) {
                             return ms_ssim_frame(a, b, peak);
                         });
}

SequenceScore fr_sequence(FrMetric metric, const VideoReader& ref, const VideoReader& dist,
                          PlaneId plane, Pooling pooling) {
    switch (metric) {
        case FrMetric::Psnr: return psnr_sequence(ref, dist, plane, pooling);
        case FrMetric::Ssim: return ssim_sequence(ref, dist);
        case FrMetric::MsSsim: return ms_ssim_sequence(ref, dist);
    }
    throw ConfigError("unknown FR metric");
}

const char* pooling_name(Pooling pooling) {
    switch (pooling) {
        case Pooling::MeanOfFrameScores: return "mean-of-frame-scores";
        case Pooling::PsnrOfMeanMse: return "psnr-of-mean-mse";
    }
    return "?";
}

Pooling parse_pooling(const std::string& name) {
    if (name == "mean" || name == "mean-of-frame-scores") return Pooling::MeanOfFrameScores;
    if (name == "mse" || name == "psnr-of-mean-mse") return Pooling::PsnrOfMeanMse;
    throw ConfigError("unknown pooling '" + name + "'");
}

}  // namespace llb
