#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "llbench/noise_lab.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"
#include "support/temp_dir.hpp"

using namespace llb;
using namespace testsupport;

TEST_CASE("mae basics") {
    const std::vector<double> a{0.0, 2.0};
    const std::vector<double> b{1.0, 1.0};
    CHECK(mae(a, b) == 1.0);
    CHECK(mae(a, a) == 0.0);
    CHECK_THROWS_AS(mae(a, std::vector<double>{1.0}), DataError);
    CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), DataError);
}

TEST_CASE("mae matches the brute-force oracle on random arrays") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> a(257);
        std::vector<double> b(257);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = dist(rng);
            b[i] = dist(rng);
        }
        CHECK(mae(a, b) == brute_force_mae(a, b));
    }
}

TEST_CASE("mae is translation invariant") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> a(100);
    std::vector<double> b(100);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = dist(rng);
        b[i] = dist(rng);
    }
    std::vector<double> a_shift = a;
    std::vector<double> b_shift = b;
    for (std::size_t i = 0; i < a.size(); ++i) {
        a_shift[i] += 3.25;
        b_shift[i] += 3.25;
    }
    CHECK(std::abs(mae(a, b) - mae(a_shift, b_shift)) < 1e-12);
}

TEST_CASE("temporal profile of a constant video has zero MAE") {
    TempDir tmp;
    const VideoFormat fmt = make_format(16, 16, 8);
    std::vector<Frame> frames(40, constant_frame(fmt, 0));
    write_clip(tmp / "flat.yuv", fmt, frames);
    const YuvReader reader(tmp / "flat.yuv", fmt);
    const NoiseProfile profile =
        temporal_profile(reader, {{4, 4, "p"}, {8, 8, "q"}}, 20);
    for (double m : profile.mae) CHECK(m == 0.0);  // all-zero luma: exact
}

TEST_CASE("temporal profile of an alternating signal has MAE a") {
    TempDir tmp;
    const VideoFormat fmt = make_format(16, 16, 8);
    std::vector<Frame> frames;
    for (int t = 0; t < 100; ++t)
        frames.push_back(constant_frame(fmt, t % 2 == 0 ? 112 : 144));
    write_clip(tmp / "alt.yuv", fmt, frames);
    const YuvReader reader(tmp / "alt.yuv", fmt);
    const NoiseProfile profile = temporal_profile(reader, {{0, 0, "p"}}, 20);
    const double a = 16.0 / 255.0;
    for (double m : profile.smoothed[0])
        CHECK(m == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
    CHECK(profile.mae[0] == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("temporal profile guards probes and window") {
    TempDir tmp;
    const VideoFormat fmt = make_format(16, 16, 8);
    write_clip(tmp / "c.yuv", fmt, {constant_frame(fmt, 1), constant_frame(fmt, 1)});
    const YuvReader reader(tmp / "c.yuv", fmt);
    CHECK_THROWS_AS(temporal_profile(reader, {{16, 0, "oob"}}, 1), RangeError);
    CHECK_THROWS_AS(temporal_profile(reader, {{0, 0, "p"}}, 3), ConfigError);  // window > frames
    CHECK_THROWS_AS(temporal_profile(reader, {{0, 0, "p"}}, 0), ConfigError);
}

TEST_CASE("denoise with window 1 is the identity") {
    TempDir tmp;
    std::mt19937_64 rng(33);
    const VideoFormat fmt = make_format(32, 16, 10);
    std::vector<Frame> frames;
    for (int i = 0; i < 4; ++i) frames.push_back(random_frame(fmt, rng));
    write_clip(tmp / "in.yuv", fmt, frames);
    const YuvReader reader(tmp / "in.yuv", fmt);
    DenoiseConfig config;
    config.window = 1;
    {
        YuvWriter writer(tmp / "out.yuv", fmt);
        denoise(reader, writer, config);
    }
    const YuvReader out(tmp / "out.yuv", fmt);
    for (int i = 0; i < 4; ++i) {
        const Frame got = out.read_frame(i);
        CHECK(got.y == frames[static_cast<std::size_t>(i)].y);
        CHECK(got.u == frames[static_cast<std::size_t>(i)].u);
        CHECK(got.v == frames[static_cast<std::size_t>(i)].v);
    }
}

TEST_CASE("denoise leaves constant videos unchanged") {
    TempDir tmp;
    const VideoFormat fmt = make_format(16, 16, 8);
    std::vector<Frame> frames(9, constant_frame(fmt, 77, 30, 200));
    write_clip(tmp / "in.yuv", fmt, frames);
    const YuvReader reader(tmp / "in.yuv", fmt);
    for (DenoiseKind kind :
         {DenoiseKind::TemporalMovingAverage, DenoiseKind::SpatiotemporalGaussian}) {
        DenoiseConfig config;
        config.kind = kind;
        config.window = 5;
        config.spatial_sigma = 1.2;
        const auto out_path = tmp / "out.yuv";
        {
            YuvWriter writer(out_path, fmt);
            denoise(reader, writer, config);
        }
        const YuvReader out(out_path, fmt);
        for (int i = 0; i < 9; ++i) {
            const Frame got = out.read_frame(i);
            CHECK(got.y == frames[static_cast<std::size_t>(i)].y);
        }
    }
}

TEST_CASE("denoise output stays within the input range") {
    TempDir tmp;
    std::mt19937_64 rng(34);
    const VideoFormat fmt = make_format(16, 16, 8);
    std::vector<Frame> frames;
    for (int i = 0; i < 12; ++i) frames.push_back(random_frame(fmt, rng));
    std::uint16_t lo = 255;
    std::uint16_t hi = 0;
    for (const Frame& f : frames)
        for (std::uint16_t v : f.y.samples()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    write_clip(tmp / "in.yuv", fmt, frames);
    const YuvReader reader(tmp / "in.yuv", fmt);
    DenoiseConfig config;
    config.window = 5;
    {
        YuvWriter writer(tmp / "out.yuv", fmt);
        denoise(reader, writer, config);
    }
    const YuvReader out(tmp / "out.yuv", fmt);
    for (int i = 0; i < 12; ++i) {
        const Frame frame = out.read_frame(i);
        for (std::uint16_t v : frame.y.samples()) {
            CHECK(v >= lo);
            CHECK(v <= hi);
        }
    }
}

TEST_CASE("moving average reduces iid noise variance by the window size") {
    TempDir tmp;
    const VideoFormat fmt = make_format(16, 16, 8);
    const int frames = 400;
    const int window = 5;
    const double sigma = 30.0;
    std::mt19937_64 rng(35);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<Frame> clip;
    for (int t = 0; t < frames; ++t) {
        Frame f = constant_frame(fmt, 0, 128, 128);
        for (auto& s : f.y.samples())
            s = static_cast<std::uint16_t>(std::clamp(std::floor(128.0 + noise(rng) + 0.5), 0.0, 255.0));
        clip.push_back(std::move(f));
    }
    write_clip(tmp / "in.yuv", fmt, clip);
    const YuvReader reader(tmp / "in.yuv", fmt);
    DenoiseConfig config;
    config.window = window;
    {
        YuvWriter writer(tmp / "out.yuv", fmt);
        denoise(reader, writer, config);
    }
    const YuvReader out(tmp / "out.yuv", fmt);

    // Temporal variance per pixel over the interior frames, averaged.
    std::vector<std::vector<double>> series(16 * 16);
    for (int t = window; t < frames - window; ++t) {
        const Frame f = out.read_frame(t);
        for (std::size_t i = 0; i < f.y.size(); ++i) series[i].push_back(f.y.data()[i]);
    }
    double mean_var = 0.0;
    for (const auto& s : series) mean_var += series_variance(s);
    mean_var /= static_cast<double>(series.size());
    const double expected = sigma * sigma / window;
    CHECK(std::abs(mean_var - expected) / expected < 0.10);
}

TEST_CASE("denoise config validation") {
    DenoiseConfig config;
    config.window = 4;
    CHECK_THROWS_AS(config.validate(), ConfigError);  // even window
    config.window = 3;
    config.weights = {0.5, 0.5};
    CHECK_THROWS_AS(config.validate(), ConfigError);  // wrong tap count
    config.weights = {0.2, 0.7, 0.2};
    CHECK_THROWS_AS(config.validate(), ConfigError);  // sums to 1.1
    config.weights = {0.25, 0.5, 0.25};
    CHECK_NOTHROW(config.validate());
    config.weights = {-0.1, 1.2, -0.1};
    CHECK_THROWS_AS(config.validate(), ConfigError);  // negative taps
}

TEST_CASE("weighted moving average follows the supplied taps") {
    TempDir tmp;
    const VideoFormat fmt = make_format(4, 4, 8);
    std::vector<Frame> frames{constant_frame(fmt, 10), constant_frame(fmt, 20),
                              constant_frame(fmt, 40)};
    write_clip(tmp / "in.yuv", fmt, frames);
    const YuvReader reader(tmp / "in.yuv", fmt);
    DenoiseConfig config;
    config.window = 3;
    config.weights = {0.25, 0.5, 0.25};
    {
        YuvWriter writer(tmp / "out.yuv", fmt);
        denoise(reader, writer, config);
    }
    const YuvReader out(tmp / "out.yuv", fmt);
    // Center frame: 0.25*10 + 0.5*20 + 0.25*40 = 22.5 -> rounds half up to 23.
    CHECK(out.read_frame(1).y.at(0, 0) == 23);
    // Edge frame: weights {0.5, 0.25} renormalized -> (2/3)*10 + (1/3)*20 = 13.33 -> 13.
    CHECK(out.read_frame(0).y.at(0, 0) == 13);
}

TEST_CASE("profile_delta compares matched profiles") {
    TempDir tmp;
    const VideoFormat fmt = make_format(32, 32, 8);
    const auto clip = noisy_static_clip(fmt, 200, 12.0, 36);
    write_clip(tmp / "noisy.yuv", fmt, clip);
    const YuvReader noisy(tmp / "noisy.yuv", fmt);
    DenoiseConfig config;
    config.window = 5;
    {
        YuvWriter writer(tmp / "denoised.yuv", fmt);
        denoise(noisy, writer, config);
    }
    const YuvReader denoised(tmp / "denoised.yuv", fmt);

    const auto probes = default_probe_grid(fmt);
    const NoiseProfile before = temporal_profile(noisy, probes, 20);
    const NoiseProfile after = temporal_profile(denoised, probes, 20);

    const ProfileDelta identity = profile_delta(before, before);
    for (double d : identity.delta_mae) CHECK(d == 0.0);
    CHECK(identity.improved == 0);
    CHECK(identity.worsened == 0);

    const ProfileDelta delta = profile_delta(before, after);
    for (double d : delta.delta_mae) CHECK(d < 0.0);
    CHECK(delta.improved == static_cast<int>(probes.size()));

    NoiseProfile other = after;
    other.probes[0].x += 1;
    CHECK_THROWS_AS(profile_delta(before, other), DataError);
}

TEST_CASE("default probe grid covers the frame interior") {
    const VideoFormat fmt = make_format(640, 480, 8);
    const auto probes = default_probe_grid(fmt);
    REQUIRE(probes.size() == 9);
    for (const auto& p : probes) {
        CHECK(p.x > 0);
        CHECK(p.x < 640);
        CHECK(p.y > 0);
        CHECK(p.y < 480);
    }
    const auto region = default_probe_grid(fmt, ProbeRegion{100, 100, 40, 40});
    for (const auto& p : region) {
        CHECK(p.x >= 100);
        CHECK(p.x < 140);
        CHECK(p.y >= 100);
        CHECK(p.y < 140);
    }
    CHECK_THROWS_AS(default_probe_grid(fmt, ProbeRegion{600, 0, 100, 10}), ConfigError);
}

TEST_CASE("probe JSON loading") {
    TempDir tmp;
    const auto path = tmp / "probes.json";
    {
        std::ofstream out(path);
        out << R"([{"x": 3, "y": 4, "label": "sky"}, {"x": 9, "y": 2}])";
    }
    const auto probes = load_probes_json(path);
    REQUIRE(probes.size() == 2);
    CHECK(probes[0].x == 3);
    CHECK(probes[0].label == "sky");
    CHECK(probes[1].label == "p2");
}
