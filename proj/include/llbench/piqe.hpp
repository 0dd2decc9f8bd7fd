#pragma once

#include <cstdint>
#include <vector>

#include "llbench/nss.hpp"
#include "llbench/plane.hpp"

namespace llb {

struct PiqeConfig {
    int block_size = 16;
    double activity_threshold = 0.1;  // MSCN variance above this marks a block active
    double segment_threshold = 0.1;   // 6-sample edge segment below this marks an artifact
    double noise_threshold = 0.1;     // |sigma_center - sigma_block| at or below: noise
    GaussianKernelSpec kernel{};
};

struct PiqeResult {
    double score = 0.0;  // in [0, 100]; higher is worse
    int active_block_count = 0;
    int distorted_block_count = 0;
    int blocks_x = 0;
    int blocks_y = 0;
    // Per-block grids, row-major, only set on spatially active blocks.
    std::vector<std::uint8_t> artifact_mask;
    std::vector<std::uint8_t> noise_mask;
};

// Block-based perceptual quality estimate on luma scaled to [0, 255]. The
// plane is cropped to a multiple of the block size. score =
// 100 * (distorted + 1) / (active + 1).
PiqeResult piqe_score(const PlaneF64& gray255, const PiqeConfig& config = {});

}  // namespace llb
