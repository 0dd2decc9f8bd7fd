#pragma once

#include <utility>
#include <vector>

#include "llbench/plane.hpp"

namespace llb {

struct AqiConfig {
    std::vector<double> directions_deg = {0, 30, 60, 90, 120, 150};
    int window = 8;  // samples per directional window, must be even and >= 4
};

struct AqiResult {
    double anisotropy = 0.0;  // standard deviation of the per-direction means
    // (direction in degrees, mean normalized Renyi entropy) per direction.
    std::vector<std::pair<double, double>> per_direction_entropy;
};

// Anisotropy of directional Renyi entropy. For every interior pixel and
// direction, a window of N samples is taken along the direction by
// nearest-pixel stepping at half-sample offsets (symmetric about the
// pixel, so reversing a direction leaves the window set unchanged); its
// 1-D pseudo-Wigner distribution is normalized to p[k] = W[k]^2 / sum W^2
// and scored with the order-3 Renyi entropy -(1/2) log2(sum p^3) divided
// by log2 N.
AqiResult aqi_score(const PlaneF64& gray, const AqiConfig& config = {});

}  // namespace llb
