#include "llbench/noise_lab.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include <json.hpp>

#include "llbench/error.hpp"

namespace llb {

double mae(std::span<const double> series, std::span<const double> smoothed) {
    if (series.empty()) throw DataError("MAE of empty series");
    if (series.size() != smoothed.size())
        throw DataError("MAE length mismatch: " + std::to_string(series.size()) + " vs " +
                        std::to_string(smoothed.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) acc += std::abs(series[i] - smoothed[i]);
    return acc / static_cast<double>(series.size());
}

NoiseProfile temporal_profile(const VideoReader& video, const std::vector<ProbeLocation>& probes,
                              int window) {
    const VideoFormat& fmt = video.format();
    const std::int64_t frames = video.frame_count();
    if (window < 1) throw ConfigError("window must be >= 1");
    if (window > frames)
        throw ConfigError("window " + std::to_string(window) + " exceeds the " +
                          std::to_string(frames) + "-frame sequence");
    for (const ProbeLocation& p : probes) {
        if (p.x < 0 || p.x >= fmt.width || p.y < 0 || p.y >= fmt.height)
            throw RangeError("probe (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                             ") outside " + std::to_string(fmt.width) + "x" +
                             std::to_string(fmt.height));
    }

    NoiseProfile profile;
    profile.probes = probes;
    profile.window = window;
    profile.series.assign(probes.size(), std::vector<double>(static_cast<std::size_t>(frames)));
    const double scale = 1.0 / fmt.max_value();
    for (std::int64_t t = 0; t < frames; ++t) {
        const Frame frame = video.read_frame(t);
        for (std::size_t p = 0; p < probes.size(); ++p)
            profile.series[p][static_cast<std::size_t>(t)] =
                frame.y.at(probes[p].x, probes[p].y) * scale;
    }

    profile.smoothed.resize(probes.size());
    profile.mae.resize(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const std::vector<double>& s = profile.series[p];
        std::vector<double> prefix(s.size() + 1, 0.0);
        for (std::size_t i = 0; i < s.size(); ++i) prefix[i + 1] = prefix[i] + s[i];
        std::vector<double>& m = profile.smoothed[p];
        m.resize(s.size());
        for (std::int64_t t = 0; t < frames; ++t) {
            // Centered window, slid inward at the edges so it always spans
            // `window` frames.
            std::int64_t lo = t - window / 2;
            lo = std::clamp<std::int64_t>(lo, 0, frames - window);
            m[static_cast<std::size_t>(t)] =
                (prefix[static_cast<std::size_t>(lo + window)] - prefix[static_cast<std::size_t>(lo)]) /
                static_cast<double>(window);
        }
        profile.mae[p] = mae(s, m);
    }
    return profile;
}

void DenoiseConfig::validate() const {
    if (window < 1) throw ConfigError("denoise window must be >= 1");
    if (window % 2 == 0) throw ConfigError("denoise window must be odd");
    if (!weights.empty()) {
        if (static_cast<int>(weights.size()) != window)
            throw ConfigError("got " + std::to_string(weights.size()) + " weights for window " +
                              std::to_string(window));
        double sum = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw ConfigError("denoise weights must be nonnegative");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("denoise weights must sum to 1");
    }
    if (kind == DenoiseKind::SpatiotemporalGaussian && spatial_sigma <= 0.0)
        throw ConfigError("spatial sigma must be positive");
}

namespace {

struct FrameF64 {
    PlaneF64 y, u, v;
};

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

PlaneF64 spatial_gaussian(const PlaneU16& in, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int r = k / 2;
    const int w = in.width();
    const int h = in.height();
    PlaneF64 horiz(w, h);
    for (int y = 0; y < h; ++y) {
        const std::uint16_t* src = in.row(y);
        double* dst = horiz.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) {
                int xx = x + i - r;
                xx = xx < 0 ? 0 : (xx >= w ? w - 1 : xx);
                acc += taps[static_cast<std::size_t>(i)] * src[xx];
            }
            dst[x] = acc;
        }
    }
    PlaneF64 out(w, h);
    for (int y = 0; y < h; ++y) {
        double* dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) {
                int yy = y + i - r;
                yy = yy < 0 ? 0 : (yy >= h ? h - 1 : yy);
                acc += taps[static_cast<std::size_t>(i)] * horiz.at(x, yy);
            }
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

PlaneU16 quantize(const PlaneF64& in, std::uint16_t max_value) {
    PlaneU16 out(in.width(), in.height());
    for (std::size_t i = 0; i < in.size(); ++i) {
        double v = std::floor(in.data()[i] + 0.5);  // round half up
        v = std::clamp(v, 0.0, static_cast<double>(max_value));
        out.data()[i] = static_cast<std::uint16_t>(v);
    }
    return out;
}

}  // namespace

void denoise(const VideoReader& input, YuvWriter& output, const DenoiseConfig& config) {
    config.validate();
    const VideoFormat& fmt = input.format();
    if (!fmt.same_geometry(output.format()))
        throw FormatError("denoise output format does not match the input");
    const std::int64_t frames = input.frame_count();
    if (config.window > frames)
        throw ConfigError("denoise window " + std::to_string(config.window) + " exceeds the " +
                          std::to_string(frames) + "-frame sequence");

    std::vector<double> taps = config.weights;
    if (taps.empty()) {
        if (config.kind == DenoiseKind::TemporalMovingAverage) {
            taps.assign(static_cast<std::size_t>(config.window), 1.0 / config.window);
        } else {
            taps = gaussian_taps(config.window, config.window / 6.0);
        }
    }
    std::vector<double> spatial;
    if (config.kind == DenoiseKind::SpatiotemporalGaussian) {
        const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * config.spatial_sigma)));
        spatial = gaussian_taps(2 * radius + 1, config.spatial_sigma);
    }

    const int r = config.window / 2;
    std::deque<FrameF64> buffer;
    std::int64_t buffer_start = 0;
    auto load = [&](std::int64_t index) {
        const Frame f = input.read_frame(index);
        if (spatial.empty())
            return FrameF64{to_f64(f.y), to_f64(f.u), to_f64(f.v)};
        return FrameF64{spatial_gaussian(f.y, spatial), spatial_gaussian(f.u, spatial),
                        spatial_gaussian(f.v, spatial)};
    };

    for (std::int64_t t = 0; t < frames; ++t) {
        const std::int64_t lo = std::max<std::int64_t>(0, t - r);
        const std::int64_t hi = std::min<std::int64_t>(frames - 1, t + r);
        while (!buffer.empty() && buffer_start < lo) {
            buffer.pop_front();
            ++buffer_start;
        }
        if (buffer.empty()) buffer_start = lo;
        while (buffer_start + static_cast<std::int64_t>(buffer.size()) <= hi)
            buffer.push_back(load(buffer_start + static_cast<std::int64_t>(buffer.size())));

        double weight_sum = 0.0;
        for (std::int64_t s = lo; s <= hi; ++s)
            weight_sum += taps[static_cast<std::size_t>(s - t + r)];

        Frame out(fmt);
        FrameF64 acc{PlaneF64(fmt.width, fmt.height), PlaneF64(fmt.chroma_width(), fmt.chroma_height()),
                     PlaneF64(fmt.chroma_width(), fmt.chroma_height())};
        for (std::int64_t s = lo; s <= hi; ++s) {
            const double w = taps[static_cast<std::size_t>(s - t + r)] / weight_sum;
            const FrameF64& src = buffer[static_cast<std::size_t>(s - buffer_start)];
            for (std::size_t i = 0; i < acc.y.size(); ++i) acc.y.data()[i] += w * src.y.data()[i];
            for (std::size_t i = 0; i < acc.u.size(); ++i) acc.u.data()[i] += w * src.u.data()[i];
            for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v.data()[i] += w * src.v.data()[i];
        }
        out.y = quantize(acc.y, fmt.max_value());
        out.u = quantize(acc.u, fmt.max_value());
        out.v = quantize(acc.v, fmt.max_value());
        output.write_frame(out);
    }
}

ProfileDelta profile_delta(const NoiseProfile& before, const NoiseProfile& after) {
    if (before.probes.size() != after.probes.size() || before.window != after.window)
        throw DataError("noise profiles are not comparable (probe count or window differ)");
    for (std::size_t i = 0; i < before.probes.size(); ++i)
        if (before.probes[i].x != after.probes[i].x || before.probes[i].y != after.probes[i].y)
            throw DataError("noise profiles were taken at different probes");
    ProfileDelta delta;
    delta.delta_mae.resize(before.probes.size());
    for (std::size_t i = 0; i < before.probes.size(); ++i) {
        delta.delta_mae[i] = after.mae[i] - before.mae[i];
        if (delta.delta_mae[i] < 0.0) ++delta.improved;
        if (delta.delta_mae[i] > 0.0) ++delta.worsened;
    }
    return delta;
}

std::vector<ProbeLocation> default_probe_grid(const VideoFormat& format,
                                              const std::optional<ProbeRegion>& region) {
    ProbeRegion r{0, 0, format.width, format.height};
    if (region) r = *region;
    if (r.width <= 0 || r.height <= 0 || r.x < 0 || r.y < 0 || r.x + r.width > format.width ||
        r.y + r.height > format.height)
        throw ConfigError("probe region outside the frame");
    std::vector<ProbeLocation> probes;
    int index = 1;
    for (int gy = 1; gy <= 3; ++gy) {
        for (int gx = 1; gx <= 3; ++gx) {
            ProbeLocation p;
            p.x = std::min(r.x + r.width - 1, r.x + gx * r.width / 4);
            p.y = std::min(r.y + r.height - 1, r.y + gy * r.height / 4);
            p.label = "p" + std::to_string(index++);
            probes.push_back(p);
        }
    }
    return probes;
}

std::vector<ProbeLocation> load_probes_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad probe JSON in " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw FormatError("probe JSON must be an array of {x, y, label}");
    std::vector<ProbeLocation> probes;
    for (const auto& item : j) {
        ProbeLocation p;
        p.x = item.at("x").get<int>();
        p.y = item.at("y").get<int>();
        p.label = item.value("label", "p" + std::to_string(probes.size() + 1));
        probes.push_back(p);
    }
    return probes;
}

}  // namespace llb
