#include <fstream>

#include <json.hpp>

#include "llbench/error.hpp"
#include "llbench/pipeline.hpp"

namespace llb {

namespace fs = std::filesystem;

EncodeCache::EncodeCache(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

std::optional<RunResult> EncodeCache::lookup(const std::string& key, bool need_decoded) const {
    const fs::path dir = root_ / key;
    const fs::path meta = dir / "result.json";
    if (!fs::exists(meta)) return std::nullopt;
    std::ifstream in(meta);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;  // damaged entry behaves as a miss
    }
    RunResult result;
    result.qp = j.value("qp", -1);
    if (j.contains("qpif_frame") && !j["qpif_frame"].is_null())
        result.qpif_frame = j["qpif_frame"].get<int>();
    result.bitstream_bytes = j.value("bitstream_bytes", static_cast<std::int64_t>(0));
    result.bitrate_kbps = j.value("bitrate_kbps", 0.0);
    result.encode_log = j.value("encode_log", "");
    result.within_tolerance = j.value("within_tolerance", true);
    result.cache_key = key;
    result.from_cache = true;
    const bool media_present = fs::exists(dir / "decoded.yuv");
    if (need_decoded && !media_present) return std::nullopt;  // pruned; caller must re-run
    if (media_present) result.decoded_path = dir / "decoded.yuv";
    return result;
}

void EncodeCache::store(const std::string& key, RunResult& result,
                        const fs::path& bitstream_src, const fs::path& decoded_src) {
    const fs::path dir = root_ / key;
    fs::create_directories(dir);
    fs::rename(bitstream_src, dir / "bitstream.bin");
    fs::rename(decoded_src, dir / "decoded.yuv");
    result.decoded_path = dir / "decoded.yuv";
    result.cache_key = key;

    nlohmann::ordered_json j;
    j["qp"] = result.qp;
    if (result.qpif_frame)
        j["qpif_frame"] = *result.qpif_frame;
    else
        j["qpif_frame"] = nullptr;
    j["bitstream_bytes"] = result.bitstream_bytes;
    j["bitrate_kbps"] = result.bitrate_kbps;
    j["encode_log"] = result.encode_log;
    j["within_tolerance"] = result.within_tolerance;

    const fs::path tmp = dir / "result.json.tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << j.dump(2) << "\n";
    }
    fs::rename(tmp, dir / "result.json");
}

void EncodeCache::prune_media(const std::string& key) {
    const fs::path dir = root_ / key;
    std::error_code ec;
    fs::remove(dir / "decoded.yuv", ec);
    fs::remove(dir / "bitstream.bin", ec);
}

}  // namespace llb
