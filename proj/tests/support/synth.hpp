#pragma once

// Deterministic synthetic content for the test suites: frames, clips,
// natural-looking planes, gratings, noise fields, and GGD/AGGD samplers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "llbench/plane.hpp"
#include "llbench/video_io.hpp"

namespace testsupport {

inline llb::VideoFormat make_format(int width, int height, int bit_depth = 8,
                                    std::int64_t fps_num = 30, std::int64_t frames = 0) {
    llb::VideoFormat fmt;
    fmt.width = width;
    fmt.height = height;
    fmt.bit_depth = bit_depth;
    fmt.fps = llb::Fps{fps_num, 1};
    fmt.frame_count = frames;
    return fmt;
}

inline llb::Frame constant_frame(const llb::VideoFormat& fmt, std::uint16_t y,
                                 std::uint16_t u = 0, std::uint16_t v = 0) {
    llb::Frame frame(fmt);
    std::fill(frame.y.samples().begin(), frame.y.samples().end(), y);
    std::fill(frame.u.samples().begin(), frame.u.samples().end(), u);
    std::fill(frame.v.samples().begin(), frame.v.samples().end(), v);
    return frame;
}

inline llb::Frame random_frame(const llb::VideoFormat& fmt, std::mt19937_64& rng) {
    llb::Frame frame(fmt);
    std::uniform_int_distribution<int> dist(0, fmt.max_value());
    for (auto* plane : {&frame.y, &frame.u, &frame.v})
        for (auto& s : plane->samples()) s = static_cast<std::uint16_t>(dist(rng));
    return frame;
}

inline void write_clip(const std::filesystem::path& path, const llb::VideoFormat& fmt,
                       const std::vector<llb::Frame>& frames) {
    llb::YuvWriter writer(path, fmt);
    for (const llb::Frame& f : frames) writer.write_frame(f);
}

// Gray [0,255] plane -> 8-bit frame with neutral chroma.
inline llb::Frame frame_from_gray(const llb::PlaneF64& gray) {
    llb::VideoFormat fmt = make_format(gray.width(), gray.height(), 8);
    llb::Frame frame(fmt);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const double v = std::clamp(std::floor(gray.data()[i] + 0.5), 0.0, 255.0);
        frame.y.data()[i] = static_cast<std::uint16_t>(v);
    }
    std::fill(frame.u.samples().begin(), frame.u.samples().end(), 128);
    std::fill(frame.v.samples().begin(), frame.v.samples().end(), 128);
    return frame;
}

// Smooth base of low-frequency waves, oriented texture tiles (some with a
// boosted center), and a few step rectangles. Lands mostly in [10, 245].
inline llb::PlaneF64 natural_image(std::uint64_t seed, int width, int height) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    llb::PlaneF64 img(width, height, 120.0);

    // Low-frequency luminance field.
    for (int k = 0; k < 6; ++k) {
        const double freq = 0.002 + 0.018 * unit(rng);
        const double angle = std::numbers::pi * unit(rng);
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        const double amp = (8.0 + 30.0 * unit(rng)) * 0.01 / freq * 0.12;
        const double fx = freq * std::cos(angle);
        const double fy = freq * std::sin(angle);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                img.at(x, y) += amp * std::sin(2.0 * std::numbers::pi * (fx * x + fy * y) + phase);
    }

    // Oriented texture tiles, half of them with a boosted center so blocks
    // are spatially inhomogeneous.
    const int tile = 16;
    for (int ty = 0; ty + tile <= height; ty += tile) {
        for (int tx = 0; tx + tile <= width; tx += tile) {
            if (unit(rng) < 0.45) continue;
            const double period = 3.0 + 7.0 * unit(rng);
            const double angle = std::numbers::pi * unit(rng);
            const double phase = 2.0 * std::numbers::pi * unit(rng);
            const double amp = 12.0 + 28.0 * unit(rng);
            const bool boost_center = unit(rng) < 0.5;
            const double fx = std::cos(angle) / period;
            const double fy = std::sin(angle) / period;
            for (int y = 0; y < tile; ++y) {
                for (int x = 0; x < tile; ++x) {
                    double a = amp;
                    if (boost_center && x >= 4 && x < 12 && y >= 4 && y < 12) a *= 2.0;
                    img.at(tx + x, ty + y) +=
                        a * std::sin(2.0 * std::numbers::pi * (fx * x + fy * y) + phase);
                }
            }
        }
    }

    // Step rectangles give sharp luminance edges.
    for (int k = 0; k < 4; ++k) {
        const int rw = static_cast<int>(width * (0.1 + 0.2 * unit(rng)));
        const int rh = static_cast<int>(height * (0.1 + 0.2 * unit(rng)));
        const int rx = static_cast<int>((width - rw) * unit(rng));
        const int ry = static_cast<int>((height - rh) * unit(rng));
        const double dc = (unit(rng) < 0.5 ? -1.0 : 1.0) * (18.0 + 22.0 * unit(rng));
        for (int y = ry; y < ry + rh; ++y)
            for (int x = rx; x < rx + rw; ++x) img.at(x, y) += dc;
    }

    for (auto& v : img.samples()) v = std::clamp(v, 10.0, 245.0);
    return img;
}

inline llb::PlaneF64 add_gaussian_noise(const llb::PlaneF64& in, double sigma,
                                        std::uint64_t seed, double lo = 0.0, double hi = 255.0) {
    std::mt19937_64 rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
    std::normal_distribution<double> noise(0.0, sigma);
    llb::PlaneF64 out = in;
    for (auto& v : out.samples()) v = std::clamp(v + noise(rng), lo, hi);
    return out;
}

inline llb::PlaneF64 grating(int width, int height, double period, double amplitude,
                             double angle_deg, double mean = 128.0) {
    llb::PlaneF64 out(width, height);
    const double rad = angle_deg * std::numbers::pi / 180.0;
    const double fx = std::cos(rad) / period;
    const double fy = std::sin(rad) / period;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.at(x, y) =
                mean + amplitude * std::sin(2.0 * std::numbers::pi * (fx * x + fy * y));
    return out;
}

inline llb::PlaneF64 white_noise(int width, int height, double sigma, double mean,
                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x6a09e667f3bcc909ULL);
    std::normal_distribution<double> noise(0.0, sigma);
    llb::PlaneF64 out(width, height);
    for (auto& v : out.samples()) v = mean + noise(rng);
    return out;
}

// out(x', y') = in(W-1-y', x'); counterclockwise quarter turn.
inline llb::PlaneF64 rotate90_ccw(const llb::PlaneF64& in) {
    llb::PlaneF64 out(in.height(), in.width());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) out.at(x, y) = in.at(in.width() - 1 - y, x);
    return out;
}

// GGD sampler: x = sign * beta * G^(1/alpha), G ~ Gamma(1/alpha, 1);
// sigma is the distribution's sqrt second moment.
inline std::vector<double> sample_ggd(double alpha, double sigma, std::size_t n,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0xbf58476d1ce4e5b9ULL);
    std::gamma_distribution<double> gamma(1.0 / alpha, 1.0);
    std::bernoulli_distribution sign(0.5);
    const double beta =
        sigma * std::sqrt(std::tgamma(1.0 / alpha) / std::tgamma(3.0 / alpha));
    std::vector<double> out(n);
    for (auto& v : out) {
        const double mag = beta * std::pow(gamma(rng), 1.0 / alpha);
        v = sign(rng) ? mag : -mag;
    }
    return out;
}

// AGGD sampler: side chosen with probability beta_side/(beta_l+beta_r),
// magnitude one-sided GGD of that side's scale.
inline std::vector<double> sample_aggd(double alpha, double sigma_left, double sigma_right,
                                       std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x94d049bb133111ebULL);
    std::gamma_distribution<double> gamma(1.0 / alpha, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double ratio = std::sqrt(std::tgamma(1.0 / alpha) / std::tgamma(3.0 / alpha));
    const double beta_l = sigma_left * ratio;
    const double beta_r = sigma_right * ratio;
    const double p_left = beta_l / (beta_l + beta_r);
    std::vector<double> out(n);
    for (auto& v : out) {
        const bool left = unit(rng) < p_left;
        const double beta = left ? beta_l : beta_r;
        const double mag = beta * std::pow(gamma(rng), 1.0 / alpha);
        v = left ? -mag : mag;
    }
    return out;
}

// Benchmark scene for the end-to-end pipeline runs: a luminance ramp with
// an oriented sinusoid in the center of every 16x16 tile, amplitudes
// spread 4..48 so blocks change classification gradually as the mock
// codec degrades them. Validated to give strictly monotone PIQE and PSNR
// over the mock codec's operating range.
inline llb::PlaneF64 benchmark_scene(int width, int height) {
    llb::PlaneF64 img(width, height, 0.0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) img.at(x, y) = 100.0 + 40.0 * x / (width - 1.0);
    const int tile = 16;
    int idx = 0;
    for (int ty = 0; ty + tile <= height; ty += tile) {
        for (int tx = 0; tx + tile <= width; tx += tile, ++idx) {
            const double amp = 4.0 + (idx * 7 % 23) * 2.0;
            const double angle = (idx * 37 % 180) * std::numbers::pi / 180.0;
            const double period = 3.0 + idx % 5;
            const double phase = idx * 0.7;
            const double fx = std::cos(angle) / period;
            const double fy = std::sin(angle) / period;
            for (int y = 4; y < 12; ++y)
                for (int x = 4; x < 12; ++x)
                    img.at(tx + x, ty + y) +=
                        amp * std::sin(2.0 * std::numbers::pi * (fx * x + fy * y) + phase);
        }
    }
    return img;
}

// Static textured scene plus temporal Gaussian noise; the workhorse clip
// for denoising and pipeline tests.
inline std::vector<llb::Frame> clip_from_scene(const llb::PlaneF64& scene,
                                               const llb::VideoFormat& fmt, std::int64_t frames,
                                               double noise_sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0xd6e8feb86659fd93ULL);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    const double scale = fmt.max_value() / 255.0;
    std::vector<llb::Frame> clip;
    clip.reserve(static_cast<std::size_t>(frames));
    for (std::int64_t t = 0; t < frames; ++t) {
        llb::Frame frame(fmt);
        for (std::size_t i = 0; i < frame.y.size(); ++i) {
            const double v = scene.data()[i] * scale + noise(rng) * scale;
            frame.y.data()[i] = static_cast<std::uint16_t>(
                std::clamp(std::floor(v + 0.5), 0.0, static_cast<double>(fmt.max_value())));
        }
        const std::uint16_t mid = static_cast<std::uint16_t>((fmt.max_value() + 1) / 2);
        std::fill(frame.u.samples().begin(), frame.u.samples().end(), mid);
        std::fill(frame.v.samples().begin(), frame.v.samples().end(), mid);
        clip.push_back(std::move(frame));
    }
    return clip;
}

inline std::vector<llb::Frame> noisy_static_clip(const llb::VideoFormat& fmt,
                                                 std::int64_t frames, double noise_sigma,
                                                 std::uint64_t seed) {
    return clip_from_scene(natural_image(seed, fmt.width, fmt.height), fmt, frames, noise_sigma,
                           seed);
}

}  // namespace testsupport
