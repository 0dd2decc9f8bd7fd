#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace llb {

// Incremental SHA-256 (FIPS 180-4); used for content-addressed cache keys.
class Sha256 {
public:
    Sha256();
    void update(const void* data, std::size_t len);
    void update(const std::string& text) { update(text.data(), text.size()); }
    std::string hex_digest();  // finalizes; further updates are invalid

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint8_t buffer_[64];
    std::size_t buffered_ = 0;
    std::uint64_t total_bytes_ = 0;
};

std::string sha256_hex(const std::string& text);
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace llb
