#include "llbench/video_io.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace llb {

namespace {

void read_exact(int fd, void* buf, std::size_t count, std::int64_t offset,
                const std::filesystem::path& path) {
    auto* out = static_cast<char*>(buf);
    std::size_t done = 0;
    while (done < count) {
        ssize_t n = ::pread(fd, out + done, count - done, offset + static_cast<std::int64_t>(done));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError("read failed on " + path.string() + ": " + std::strerror(errno));
        }
        if (n == 0) throw IoError("unexpected end of file in " + path.string());
        done += static_cast<std::size_t>(n);
    }
}

void write_exact(int fd, const void* buf, std::size_t count, const std::filesystem::path& path) {
    const auto* in = static_cast<const char*>(buf);
    std::size_t done = 0;
    while (done < count) {
        ssize_t n = ::write(fd, in + done, count - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError("write failed on " + path.string() + ": " + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

std::int64_t file_size_of(int fd, const std::filesystem::path& path) {
    off_t end = ::lseek(fd, 0, SEEK_END);
    if (end < 0) throw IoError("lseek failed on " + path.string());
    return static_cast<std::int64_t>(end);
}

// Decodes one stored plane into 16-bit samples.
void decode_plane(const std::uint8_t* raw, PlaneU16& plane, const VideoFormat& fmt, bool strict,
                  const std::filesystem::path& path) {
    const std::size_t n = plane.size();
    std::uint16_t* out = plane.data();
    if (fmt.bit_depth == 8) {
        for (std::size_t i = 0; i < n; ++i) out[i] = raw[i];
        return;
    }
    const std::uint16_t max_value = fmt.max_value();
    for (std::size_t i = 0; i < n; ++i) {
        std::uint16_t v = static_cast<std::uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
        if (v > max_value) {
            if (strict) {
                throw FormatError("corrupt sample " + std::to_string(v) + " exceeds " +
                                  std::to_string(max_value) + " in " + path.string());
            }
            v = max_value;
        }
        out[i] = v;
    }
}

void encode_plane(const PlaneU16& plane, std::uint8_t* raw, const VideoFormat& fmt) {
    const std::size_t n = plane.size();
    const std::uint16_t* in = plane.data();
    if (fmt.bit_depth == 8) {
        for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<std::uint8_t>(in[i]);
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        raw[2 * i] = static_cast<std::uint8_t>(in[i] & 0xFF);
        raw[2 * i + 1] = static_cast<std::uint8_t>(in[i] >> 8);
    }
}

Frame decode_frame_bytes(const std::vector<std::uint8_t>& raw, const VideoFormat& fmt, bool strict,
                         const std::filesystem::path& path) {
    Frame frame(fmt);
    const std::int64_t luma_bytes = static_cast<std::int64_t>(frame.y.size()) * fmt.bytes_per_sample();
    const std::int64_t chroma_bytes = static_cast<std::int64_t>(frame.u.size()) * fmt.bytes_per_sample();
    decode_plane(raw.data(), frame.y, fmt, strict, path);
    decode_plane(raw.data() + luma_bytes, frame.u, fmt, strict, path);
    decode_plane(raw.data() + luma_bytes + chroma_bytes, frame.v, fmt, strict, path);
    return frame;
}

}  // namespace

Fps Fps::parse(const std::string& text) {
    auto fail = [&] { throw ConfigError("cannot parse fps '" + text + "' (use N or N/D)"); };
    std::int64_t num = 0;
    std::int64_t den = 1;
    auto slash = text.find('/');
    const std::string num_part = text.substr(0, slash);
    auto res = std::from_chars(num_part.data(), num_part.data() + num_part.size(), num);
    if (res.ec != std::errc() || res.ptr != num_part.data() + num_part.size()) fail();
    if (slash != std::string::npos) {
        const std::string den_part = text.substr(slash + 1);
        res = std::from_chars(den_part.data(), den_part.data() + den_part.size(), den);
        if (res.ec != std::errc() || res.ptr != den_part.data() + den_part.size()) fail();
    }
    if (num <= 0 || den <= 0) fail();
    return Fps{num, den};
}

const char* plane_name(PlaneId plane) {
    switch (plane) {
        case PlaneId::Y: return "y";
        case PlaneId::U: return "u";
        case PlaneId::V: return "v";
    }
    return "?";
}

PlaneId parse_plane(const std::string& name) {
    if (name == "y" || name == "Y") return PlaneId::Y;
    if (name == "u" || name == "U") return PlaneId::U;
    if (name == "v" || name == "V") return PlaneId::V;
    throw ConfigError("unknown plane '" + name + "'");
}

void VideoFormat::validate() const {
    if (width <= 0 || height <= 0)
        throw FormatError("frame dimensions must be positive");
    if (width % 2 != 0 || height % 2 != 0)
        throw FormatError("4:2:0 requires even width and height, got " + std::to_string(width) +
                          "x" + std::to_string(height));
    if (bit_depth != 8 && bit_depth != 10)
        throw FormatError("bit depth must be 8 or 10, got " + std::to_string(bit_depth));
    if (fps.num <= 0 || fps.den <= 0) throw FormatError("fps must be positive");
    if (frame_count < 0) throw FormatError("frame count must be >= 0");
}

std::int64_t frame_size_bytes(const VideoFormat& format) {
    format.validate();
    return format.frame_size_bytes();
}

PlaneU16& Frame::plane(PlaneId id) {
    switch (id) {
        case PlaneId::Y: return y;
        case PlaneId::U: return u;
        case PlaneId::V: return v;
    }
    return y;
}

const PlaneU16& Frame::plane(PlaneId id) const {
    switch (id) {
        case PlaneId::Y: return y;
        case PlaneId::U: return u;
        case PlaneId::V: return v;
    }
    return y;
}

YuvReader::YuvReader(const std::filesystem::path& path, VideoFormat format, bool strict)
    : format_(format), strict_(strict), path_(path) {
    format_.validate();
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    const std::int64_t size = file_size_of(fd_, path);
    const std::int64_t frame_bytes = format_.frame_size_bytes();
    if (size == 0) {
        ::close(fd_);
        fd_ = -1;
        throw FormatError("zero-frame file: " + path.string());
    }
    if (size % frame_bytes != 0) {
        ::close(fd_);
        fd_ = -1;
        throw FormatError("file size " + std::to_string(size) + " of " + path.string() +
                          " is not a multiple of the frame size " + std::to_string(frame_bytes));
    }
    const std::int64_t frames_in_file = size / frame_bytes;
    if (format_.frame_count == 0) {
        format_.frame_count = frames_in_file;
    } else if (format_.frame_count > frames_in_file) {
        ::close(fd_);
        fd_ = -1;
        throw FormatError("declared frame count " + std::to_string(format_.frame_count) +
                          " exceeds the " + std::to_string(frames_in_file) + " frames in " +
                          path.string());
    }
}

YuvReader::~YuvReader() {
    if (fd_ >= 0) ::close(fd_);
}

Frame YuvReader::read_frame(std::int64_t index) const {
    if (index < 0 || index >= format_.frame_count)
        throw RangeError("frame index " + std::to_string(index) + " out of range [0, " +
                         std::to_string(format_.frame_count) + ")");
    const std::int64_t frame_bytes = format_.frame_size_bytes();
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(frame_bytes));
    read_exact(fd_, raw.data(), raw.size(), index * frame_bytes, path_);
    return decode_frame_bytes(raw, format_, strict_, path_);
}

YuvWriter::YuvWriter(const std::filesystem::path& path, VideoFormat format)
    : format_(format), path_(path) {
    format_.validate();
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd_ < 0) throw IoError("cannot create " + path.string() + ": " + std::strerror(errno));
}

YuvWriter::~YuvWriter() {
    if (fd_ >= 0) ::close(fd_);
}

void YuvWriter::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void YuvWriter::write_frame(const Frame& frame) {
    if (fd_ < 0) throw IoError("writer already closed: " + path_.string());
    if (!frame.format.same_geometry(format_))
        throw FormatError("frame geometry does not match writer format for " + path_.string());
    const std::uint16_t max_value = format_.max_value();
    for (const PlaneU16* p : {&frame.y, &frame.u, &frame.v}) {
        for (std::uint16_t v : p->samples()) {
            if (v > max_value)
                throw FormatError("sample " + std::to_string(v) + " exceeds bit depth " +
                                  std::to_string(format_.bit_depth));
        }
    }
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(format_.frame_size_bytes()));
    const std::int64_t luma_bytes = static_cast<std::int64_t>(frame.y.size()) * format_.bytes_per_sample();
    const std::int64_t chroma_bytes = static_cast<std::int64_t>(frame.u.size()) * format_.bytes_per_sample();
    encode_plane(frame.y, raw.data(), format_);
    encode_plane(frame.u, raw.data() + luma_bytes, format_);
    encode_plane(frame.v, raw.data() + luma_bytes + chroma_bytes, format_);
    write_exact(fd_, raw.data(), raw.size(), path_);
    ++frames_written_;
}

namespace {

// Parses the space-separated Y4M parameter tags following "YUV4MPEG2".
VideoFormat parse_y4m_header(const std::string& header, const std::filesystem::path& path) {
    VideoFormat fmt;
    fmt.bit_depth = 8;
    std::size_t pos = 0;
    bool seen_chroma = false;
    while (pos < header.size()) {
        while (pos < header.size() && header[pos] == ' ') ++pos;
        if (pos >= header.size()) break;
        std::size_t end = header.find(' ', pos);
        if (end == std::string::npos) end = header.size();
        const std::string tag = header.substr(pos, end - pos);
        pos = end;
        if (tag.empty()) continue;
        const char key = tag[0];
        const std::string value = tag.substr(1);
        switch (key) {
            case 'W': fmt.width = std::stoi(value); break;
            case 'H': fmt.height = std::stoi(value); break;
            case 'F': {
                auto colon = value.find(':');
                if (colon == std::string::npos)
                    throw FormatError("bad Y4M frame rate tag in " + path.string());
                fmt.fps.num = std::stoll(value.substr(0, colon));
                fmt.fps.den = std::stoll(value.substr(colon + 1));
                break;
            }
            case 'C': {
                seen_chroma = true;
                if (value == "420" || value == "420jpeg" || value == "420mpeg2" ||
                    value == "420paldv") {
                    fmt.bit_depth = 8;
                } else if (value == "420p10") {
                    fmt.bit_depth = 10;
                } else {
                    throw FormatError("unsupported Y4M chroma tag C" + value + " in " +
                                      path.string() + " (only 4:2:0 is supported)");
                }
                break;
            }
            default: break;  // I, A, X tags are irrelevant here
        }
    }
    if (!seen_chroma) fmt.bit_depth = 8;  // Y4M default is C420jpeg
    fmt.frame_count = 0;
    fmt.validate();
    return fmt;
}

}  // namespace

Y4mReader::Y4mReader(const std::filesystem::path& path, bool strict)
    : strict_(strict), path_(path) {
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    const std::int64_t size = file_size_of(fd_, path);

    // Stream header line.
    std::string line;
    std::int64_t pos = 0;
    {
        char c = 0;
        while (pos < size) {
            read_exact(fd_, &c, 1, pos, path);
            ++pos;
            if (c == '\n') break;
            line.push_back(c);
            if (line.size() > 512) throw FormatError("oversized Y4M header in " + path.string());
        }
    }
    if (line.rfind("YUV4MPEG2", 0) != 0)
        throw FormatError(path.string() + " is not a YUV4MPEG2 stream");
    format_ = parse_y4m_header(line.substr(9), path);
    const std::int64_t frame_bytes = format_.frame_size_bytes();

    // Index the FRAME markers; per-frame parameter strings may vary in length.
    while (pos < size) {
        std::string marker;
        char c = 0;
        while (pos < size) {
            read_exact(fd_, &c, 1, pos, path);
            ++pos;
            if (c == '\n') break;
            marker.push_back(c);
            if (marker.size() > 256) throw FormatError("oversized FRAME header in " + path.string());
        }
        if (marker.rfind("FRAME", 0) != 0)
            throw FormatError("missing FRAME marker in " + path.string());
        if (pos + frame_bytes > size)
            throw FormatError("truncated frame payload in " + path.string());
        frame_offsets_.push_back(pos);
        pos += frame_bytes;
    }
    if (frame_offsets_.empty()) throw FormatError("zero-frame file: " + path.string());
    format_.frame_count = static_cast<std::int64_t>(frame_offsets_.size());
}

Y4mReader::~Y4mReader() {
    if (fd_ >= 0) ::close(fd_);
}

Frame Y4mReader::read_frame(std::int64_t index) const {
    if (index < 0 || index >= format_.frame_count)
        throw RangeError("frame index " + std::to_string(index) + " out of range [0, " +
                         std::to_string(format_.frame_count) + ")");
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(format_.frame_size_bytes()));
    read_exact(fd_, raw.data(), raw.size(), frame_offsets_[static_cast<std::size_t>(index)], path_);
    return decode_frame_bytes(raw, format_, strict_, path_);
}

std::optional<VideoFormat> read_format_sidecar(const std::filesystem::path& video_path) {
    const std::filesystem::path sidecar = video_path.string() + ".json";
    std::ifstream in(sidecar);
    if (!in) return std::nullopt;
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad geometry sidecar " + sidecar.string() + ": " + e.what());
    }
    VideoFormat fmt;
    try {
        fmt.width = j.at("width").get<int>();
        fmt.height = j.at("height").get<int>();
        fmt.bit_depth = j.value("bit_depth", 8);
        fmt.fps = Fps::parse(j.value("fps", std::string("30")));
        fmt.frame_count = j.value("frames", 0);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad geometry sidecar " + sidecar.string() + ": " + e.what());
    }
    fmt.validate();
    return fmt;
}

std::unique_ptr<VideoReader> open_video(const std::filesystem::path& path,
                                        const std::optional<VideoFormat>& format, bool strict) {
    if (path.extension() == ".y4m") return std::make_unique<Y4mReader>(path, strict);
    std::optional<VideoFormat> effective = format;
    if (!effective) effective = read_format_sidecar(path);
    if (!effective)
        throw ConfigError("raw YUV input " + path.string() +
                          " needs geometry flags or a " + path.filename().string() +
                          ".json sidecar");
    return std::make_unique<YuvReader>(path, *effective, strict);
}

PlaneF64 normalize_plane(const Frame& frame, PlaneId plane) {
    const PlaneU16& src = frame.plane(plane);
    const double scale = 1.0 / frame.format.max_value();
    PlaneF64 out(src.width(), src.height());
    for (std::size_t i = 0; i < src.size(); ++i) out.data()[i] = src.data()[i] * scale;
    return out;
}

PlaneF64 luma_as_gray255(const Frame& frame) {
    const double scale = 255.0 / frame.format.max_value();
    PlaneF64 out(frame.y.width(), frame.y.height());
    for (std::size_t i = 0; i < frame.y.size(); ++i) out.data()[i] = frame.y.data()[i] * scale;
    return out;
}

}  // namespace llb
