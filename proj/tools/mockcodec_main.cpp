// Deterministic stand-in for an external video codec, used by the test
// suites and runnable from adapter templates. The "bitstream" is an opaque
// file whose size follows the closed-form rate model
//     R(qp) = anchor_rate * 2^(-qp/6)   [kbps]
// and whose reconstruction travels in a sidecar next to it. Decoding a
// frame at QP q blends the source toward its 8x8 block means with weight
// beta = q/63 and optionally adds hash noise of amplitude noise_gain*beta
// to luma, so distortion grows monotonically with QP while QP 0 is
// lossless. A one-time QP increment at --qpif-frame makes the rate linear
// in the switch frame.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "llbench/error.hpp"
#include "llbench/video_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kQpMax = 63;

void bump_counter(const std::string& count_file) {
    if (count_file.empty()) return;
    std::ofstream out(count_file, std::ios::app);
    out << "E\n";
}

// Deterministic per-sample noise in [-1, 1].
double hash_noise(int x, int y, std::int64_t t) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&](std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL;
        h *= 1099511628211ULL;
    };
    mix(static_cast<std::uint64_t>(x));
    mix(static_cast<std::uint64_t>(y));
    mix(static_cast<std::uint64_t>(t));
    h ^= h >> 33;
    return static_cast<double>(h % 2000001ULL) / 1000000.0 - 1.0;
}

llb::PlaneU16 degrade_plane(const llb::PlaneU16& in, double beta, std::uint16_t max_value,
                            double noise_amp, std::int64_t frame_index) {
    const int block = 8;
    llb::PlaneU16 out(in.width(), in.height());
    for (int by = 0; by < in.height(); by += block) {
        for (int bx = 0; bx < in.width(); bx += block) {
            const int h = std::min(block, in.height() - by);
            const int w = std::min(block, in.width() - bx);
            double mean = 0.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) mean += in.at(bx + x, by + y);
            mean /= w * h;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    double v = (1.0 - beta) * in.at(bx + x, by + y) + beta * mean;
                    if (noise_amp > 0.0)
                        v += noise_amp * hash_noise(bx + x, by + y, frame_index);
                    const double q = std::clamp(std::floor(v + 0.5), 0.0,
                                                static_cast<double>(max_value));
                    out.at(bx + x, by + y) = static_cast<std::uint16_t>(q);
                }
            }
        }
    }
    return out;
}

int run_encode(const std::string& input, const std::string& output, int qp, int qpif_frame,
               const llb::VideoFormat& format_in, double anchor_rate, double noise_gain,
               const std::string& count_file) {
    bump_counter(count_file);
    llb::VideoFormat format = format_in;
    llb::YuvReader reader(input, format);
    format = reader.format();
    const std::int64_t frames = format.frame_count;

    const double beta_base = static_cast<double>(qp) / kQpMax;
    const double beta_qpif = static_cast<double>(std::min(qp + 1, kQpMax)) / kQpMax;
    const std::int64_t switch_frame = qpif_frame >= 0 ? qpif_frame : frames;
    const double noise_scale = format.max_value() / 255.0;

    const fs::path recon_path = fs::path(output).string() + ".recon.yuv";
    {
        llb::YuvWriter writer(recon_path, format);
        for (std::int64_t t = 0; t < frames; ++t) {
            const llb::Frame src = reader.read_frame(t);
            const double beta = t >= switch_frame ? beta_qpif : beta_base;
            llb::Frame rec(format);
            rec.y = degrade_plane(src.y, beta, format.max_value(),
                                  noise_gain * beta * noise_scale, t);
            rec.u = degrade_plane(src.u, beta, format.max_value(), 0.0, t);
            rec.v = degrade_plane(src.v, beta, format.max_value(), 0.0, t);
            writer.write_frame(rec);
        }
    }

    // Rate model; with a switch frame the two QP segments contribute
    // linearly.
    const double rate_base = anchor_rate * std::pow(2.0, -qp / 6.0);
    const double rate_qpif = anchor_rate * std::pow(2.0, -std::min(qp + 1, kQpMax) / 6.0);
    const double f = static_cast<double>(std::clamp<std::int64_t>(switch_frame, 0, frames));
    const double rate = (f / static_cast<double>(frames)) * rate_base +
                        (1.0 - f / static_cast<double>(frames)) * rate_qpif;
    const double seconds = static_cast<double>(frames) * format.fps.den /
                           static_cast<double>(format.fps.num);
    const std::int64_t size = static_cast<std::int64_t>(std::llround(rate * seconds * 1000.0 / 8.0));

    nlohmann::ordered_json header;
    header["magic"] = "mockcodec";
    header["qp"] = qp;
    header["qpif_frame"] = qpif_frame;
    header["width"] = format.width;
    header["height"] = format.height;
    header["bit_depth"] = format.bit_depth;
    header["frames"] = frames;
    header["fps"] = format.fps.str();
    header["rate_kbps"] = rate;
    const std::string head = header.dump() + "\n";
    if (static_cast<std::int64_t>(head.size()) > size) {
        std::cerr << "mockcodec: modeled bitstream (" << size
                  << " bytes) cannot hold the header; raise --anchor-rate\n";
        return 1;
    }

    std::ofstream out(output, std::ios::binary);
    if (!out) {
        std::cerr << "mockcodec: cannot write " << output << "\n";
        return 1;
    }
    out << head;
    std::string zeros(static_cast<std::size_t>(64 * 1024), '\0');
    std::int64_t remaining = size - static_cast<std::int64_t>(head.size());
    while (remaining > 0) {
        const std::int64_t chunk = std::min<std::int64_t>(remaining,
                                                          static_cast<std::int64_t>(zeros.size()));
        out.write(zeros.data(), chunk);
        remaining -= chunk;
    }
    return 0;
}

int run_decode(const std::string& input, const std::string& output) {
    const fs::path recon = fs::path(input).string() + ".recon.yuv";
    if (!fs::exists(recon)) {
        std::cerr << "mockcodec: reconstruction sidecar missing: " << recon << "\n";
        return 1;
    }
    fs::copy_file(recon, output, fs::copy_options::overwrite_existing);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mock video codec with a closed-form rate model"};
    app.require_subcommand(1);

    std::string input;
    std::string output;
    std::string count_file;
    std::string fps = "30";
    int qp = 32;
    int qpif_frame = -1;
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    int frames = 0;
    double anchor_rate = 20000.0;
    double noise_gain = 0.0;

    CLI::App* encode = app.add_subcommand("encode", "encode a raw YUV file");
    encode->add_option("--input", input)->required();
    encode->add_option("--output", output)->required();
    encode->add_option("--qp", qp)->check(CLI::Range(0, kQpMax));
    encode->add_option("--qpif-frame", qpif_frame);
    encode->add_option("--width", width)->required();
    encode->add_option("--height", height)->required();
    encode->add_option("--bitdepth", bit_depth);
    encode->add_option("--fps", fps);
    encode->add_option("--frames", frames);
    encode->add_option("--anchor-rate", anchor_rate);
    encode->add_option("--noise-gain", noise_gain);
    encode->add_option("--count-file", count_file);

    CLI::App* decode = app.add_subcommand("decode", "decode a mock bitstream");
    decode->add_option("--input", input)->required();
    decode->add_option("--output", output)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (encode->parsed()) {
            llb::VideoFormat format;
            format.width = width;
            format.height = height;
            format.bit_depth = bit_depth;
            format.fps = llb::Fps::parse(fps);
            format.frame_count = frames;
            return run_encode(input, output, qp, qpif_frame, format, anchor_rate, noise_gain,
                              count_file);
        }
        return run_decode(input, output);
    } catch (const llb::Error& e) {
        std::cerr << "mockcodec: " << e.what() << "\n";
        return 1;
    }
}
