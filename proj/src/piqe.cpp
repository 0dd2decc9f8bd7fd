#include "llbench/piqe.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "llbench/error.hpp"

namespace llb {

namespace {

double segment_stddev(const std::vector<double>& values, std::size_t start, std::size_t len) {
    double mean = 0.0;
    for (std::size_t i = 0; i < len; ++i) mean += values[start + i];
    mean /= static_cast<double>(len);
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double d = values[start + i] - mean;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(len));
}

// Any 6-sample run along the four block borders with near-zero deviation
// marks a noticeable blocking artifact.
bool has_flat_edge_segment(const PlaneF64& mscn, int x0, int y0, int block, double threshold) {
    constexpr int kSegment = 6;
    std::vector<double> edge(static_cast<std::size_t>(block));
    const auto scan = [&](auto&& fetch) {
        for (int i = 0; i < block; ++i) edge[static_cast<std::size_t>(i)] = fetch(i);
        for (int s = 0; s + kSegment <= block; ++s)
            if (segment_stddev(edge, static_cast<std::size_t>(s), kSegment) < threshold) return true;
        return false;
    };
    if (scan([&](int i) { return mscn.at(x0 + i, y0); })) return true;
    if (scan([&](int i) { return mscn.at(x0 + i, y0 + block - 1); })) return true;
    if (scan([&](int i) { return mscn.at(x0, y0 + i); })) return true;
    if (scan([&](int i) { return mscn.at(x0 + block - 1, y0 + i); })) return true;
    return false;
}

struct BlockStats {
    double variance = 0.0;
    double sigma = 0.0;
    double sigma_center = 0.0;
};

BlockStats block_stats(const PlaneF64& mscn, int x0, int y0, int block) {
    BlockStats st;
    double mean = 0.0;
    for (int y = 0; y < block; ++y)
        for (int x = 0; x < block; ++x) mean += mscn.at(x0 + x, y0 + y);
    const double n = static_cast<double>(block) * block;
    mean /= n;
    double acc = 0.0;
    for (int y = 0; y < block; ++y)
        for (int x = 0; x < block; ++x) {
            const double d = mscn.at(x0 + x, y0 + y) - mean;
            acc += d * d;
        }
    st.variance = acc / n;
    st.sigma = std::sqrt(st.variance);

    const int q = block / 4;  // central half of the block
    const int side = block - 2 * q;
    double cmean = 0.0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) cmean += mscn.at(x0 + q + x, y0 + q + y);
    const double cn = static_cast<double>(side) * side;
    cmean /= cn;
    double cacc = 0.0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double d = mscn.at(x0 + q + x, y0 + q + y) - cmean;
            cacc += d * d;
        }
    st.sigma_center = std::sqrt(cacc / cn);
    return st;
}

}  // namespace

PiqeResult piqe_score(const PlaneF64& gray255, const PiqeConfig& config) {
    const int block = config.block_size;
    if (gray255.width() < block || gray255.height() < block)
        throw DataError("plane " + std::to_string(gray255.width()) + "x" +
                        std::to_string(gray255.height()) + " smaller than one " +
                        std::to_string(block) + "x" + std::to_string(block) + " PIQE block");

    const int blocks_x = gray255.width() / block;
    const int blocks_y = gray255.height() / block;
    PlaneF64 cropped(blocks_x * block, blocks_y * block);
    for (int y = 0; y < cropped.height(); ++y)
        for (int x = 0; x < cropped.width(); ++x) cropped.at(x, y) = gray255.at(x, y);

    const MscnField field = compute_mscn(cropped, config.kernel);

    PiqeResult result;
    result.blocks_x = blocks_x;
    result.blocks_y = blocks_y;
    result.artifact_mask.assign(static_cast<std::size_t>(blocks_x) * blocks_y, 0);
    result.noise_mask.assign(static_cast<std::size_t>(blocks_x) * blocks_y, 0);

    for (int by = 0; by < blocks_y; ++by) {
        for (int bx = 0; bx < blocks_x; ++bx) {
            const int x0 = bx * block;
            const int y0 = by * block;
            const BlockStats st = block_stats(field.values, x0, y0, block);
            if (st.variance <= config.activity_threshold) continue;
            ++result.active_block_count;

            const std::size_t idx = static_cast<std::size_t>(by) * blocks_x + bx;
            bool distorted = false;
            if (has_flat_edge_segment(field.values, x0, y0, block, config.segment_threshold)) {
                result.artifact_mask[idx] = 1;
                distorted = true;
            }
            // Homogeneous randomness: center deviation indistinguishable
            // from the whole block marks Gaussian-noise distortion.
            if (!distorted && std::abs(st.sigma_center - st.sigma) <= config.noise_threshold) {
                result.noise_mask[idx] = 1;
                distorted = true;
            }
            if (distorted) ++result.distorted_block_count;
        }
    }

    result.score = 100.0 * (result.distorted_block_count + 1.0) /
                   (result.active_block_count + 1.0);
    return result;
}

}  // namespace llb
