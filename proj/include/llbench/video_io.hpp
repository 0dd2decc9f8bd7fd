#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llbench/error.hpp"
#include "llbench/plane.hpp"

namespace llb {

// Rational frames-per-second, e.g. 30000/1001.
struct Fps {
    std::int64_t num = 30;
    std::int64_t den = 1;

    double as_double() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

    // Accepts "30", "29.97" is rejected; rationals are written "num/den".
    static Fps parse(const std::string& text);

    bool operator==(const Fps&) const = default;
};

enum class PlaneId { Y, U, V };

const char* plane_name(PlaneId plane);
PlaneId parse_plane(const std::string& name);

// Geometry and timing of a raw planar YUV 4:2:0 sequence.
struct VideoFormat {
    int width = 0;
    int height = 0;
    int bit_depth = 8;  // 8 or 10
    Fps fps{};
    std::int64_t frame_count = 0;  // 0 = infer from the file size

    void validate() const;  // throws FormatError

    int bytes_per_sample() const { return bit_depth > 8 ? 2 : 1; }
    std::uint16_t max_value() const { return static_cast<std::uint16_t>((1u << bit_depth) - 1); }
    int chroma_width() const { return width / 2; }
    int chroma_height() const { return height / 2; }
    std::int64_t samples_per_frame() const {
        return static_cast<std::int64_t>(width) * height * 3 / 2;
    }
    std::int64_t frame_size_bytes() const { return samples_per_frame() * bytes_per_sample(); }

    bool same_geometry(const VideoFormat& other) const {
        return width == other.width && height == other.height && bit_depth == other.bit_depth;
    }

    bool operator==(const VideoFormat&) const = default;
};

// Bytes per stored frame: 1.5*W*H samples, 1 byte each at 8 bit and 2 bytes
// (little-endian words) at 10 bit.
std::int64_t frame_size_bytes(const VideoFormat& format);

// One decoded frame. Samples are held as 16-bit words for both bit depths.
struct Frame {
    VideoFormat format;
    PlaneU16 y;
    PlaneU16 u;
    PlaneU16 v;

    Frame() = default;
    explicit Frame(const VideoFormat& fmt)
        : format(fmt),
          y(fmt.width, fmt.height),
          u(fmt.chroma_width(), fmt.chroma_height()),
          v(fmt.chroma_width(), fmt.chroma_height()) {}

    PlaneU16& plane(PlaneId id);
    const PlaneU16& plane(PlaneId id) const;
};

struct ProbeLocation {
    int x = 0;
    int y = 0;
    std::string label;
};

// Random-access frame source. read_frame is const and safe to call from
// several threads at once; every call fills a caller-owned Frame.
class VideoReader {
public:
    virtual ~VideoReader() = default;
    virtual const VideoFormat& format() const = 0;
    std::int64_t frame_count() const { return format().frame_count; }
    virtual Frame read_frame(std::int64_t index) const = 0;
};

// Raw planar .yuv file. 10-bit samples are little-endian 16-bit words with
// the six high bits zero; strict mode rejects out-of-range words, lenient
// mode clips them.
class YuvReader : public VideoReader {
public:
    YuvReader(const std::filesystem::path& path, VideoFormat format, bool strict = true);
    ~YuvReader() override;

    YuvReader(const YuvReader&) = delete;
    YuvReader& operator=(const YuvReader&) = delete;

    const VideoFormat& format() const override { return format_; }
    Frame read_frame(std::int64_t index) const override;

private:
    int fd_ = -1;
    VideoFormat format_;
    bool strict_ = true;
    std::filesystem::path path_;
};

class YuvWriter {
public:
    YuvWriter(const std::filesystem::path& path, VideoFormat format);
    ~YuvWriter();

    YuvWriter(const YuvWriter&) = delete;
    YuvWriter& operator=(const YuvWriter&) = delete;

    const VideoFormat& format() const { return format_; }
    void write_frame(const Frame& frame);
    std::int64_t frames_written() const { return frames_written_; }
    void close();

private:
    int fd_ = -1;
    VideoFormat format_;
    std::int64_t frames_written_ = 0;
    std::filesystem::path path_;
};

// YUV4MPEG2 stream reader; geometry comes from the stream header and
// overrides any caller-supplied hint. Only C420 family tags are accepted.
class Y4mReader : public VideoReader {
public:
    explicit Y4mReader(const std::filesystem::path& path, bool strict = true);
    ~Y4mReader() override;

    Y4mReader(const Y4mReader&) = delete;
    Y4mReader& operator=(const Y4mReader&) = delete;

    const VideoFormat& format() const override { return format_; }
    Frame read_frame(std::int64_t index) const override;

private:
    int fd_ = -1;
    VideoFormat format_;
    bool strict_ = true;
    std::vector<std::int64_t> frame_offsets_;
    std::filesystem::path path_;
};

// Geometry sidecar "<video>.json": {"width", "height", "bit_depth",
// "fps", "frames"}. Returns nothing when no sidecar exists.
std::optional<VideoFormat> read_format_sidecar(const std::filesystem::path& video_path);

// Opens a .y4m file by header or a raw .yuv file with the supplied format;
// raw files without an explicit format fall back to their sidecar.
std::unique_ptr<VideoReader> open_video(const std::filesystem::path& path,
                                        const std::optional<VideoFormat>& format,
                                        bool strict = true);

// Samples divided by (2^bit_depth - 1); output lies in [0, 1].
PlaneF64 normalize_plane(const Frame& frame, PlaneId plane);

// Luma rescaled to [0, 255] reals; the working domain of the NR metrics.
PlaneF64 luma_as_gray255(const Frame& frame);

}  // namespace llb
