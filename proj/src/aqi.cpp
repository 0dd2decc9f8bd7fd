#include "llbench/aqi.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "llbench/error.hpp"

namespace llb {

namespace {

struct DirectionSteps {
    // Pixel offsets of the positive half-sample taps t_j = j + 1/2; the
    // negative taps are the exact negations, so reversed directions see
    // the same sample pairs.
    std::vector<int> dx;
    std::vector<int> dy;
};

DirectionSteps direction_steps(double degrees, int half_taps) {
    const double rad = degrees * std::numbers::pi / 180.0;
    DirectionSteps steps;
    steps.dx.resize(static_cast<std::size_t>(half_taps));
    steps.dy.resize(static_cast<std::size_t>(half_taps));
    for (int j = 0; j < half_taps; ++j) {
        const double t = j + 0.5;
        steps.dx[static_cast<std::size_t>(j)] = static_cast<int>(std::lround(t * std::cos(rad)));
        steps.dy[static_cast<std::size_t>(j)] = static_cast<int>(std::lround(t * std::sin(rad)));
    }
    return steps;
}

}  // namespace

AqiResult aqi_score(const PlaneF64& gray, const AqiConfig& config) {
    const int n = config.window;
    if (n < 4 || n % 2 != 0) throw ConfigError("AQI window must be even and >= 4");
    if (config.directions_deg.empty()) throw ConfigError("AQI needs at least one direction");
    const int half_taps = n / 2;
    const int margin = half_taps;  // covers |round((N/2 - 1/2) * cos)| <= N/2
    if (gray.width() <= 2 * margin || gray.height() <= 2 * margin)
        throw DataError("plane " + std::to_string(gray.width()) + "x" +
                        std::to_string(gray.height()) + " too small for AQI window " +
                        std::to_string(n));

    // cos(2*pi*(2j+1)*k/N) for the half-sample pseudo-Wigner kernel.
    std::vector<double> kernel(static_cast<std::size_t>(half_taps) * n);
    for (int j = 0; j < half_taps; ++j)
        for (int k = 0; k < n; ++k)
            kernel[static_cast<std::size_t>(j) * n + k] =
                std::cos(2.0 * std::numbers::pi * (2 * j + 1) * k / n);

    const double inv_log2_n = 1.0 / std::log2(static_cast<double>(n));
    AqiResult result;
    result.per_direction_entropy.reserve(config.directions_deg.size());

    std::vector<double> products(static_cast<std::size_t>(half_taps));
    std::vector<double> spectrum(static_cast<std::size_t>(n));
    for (double degrees : config.directions_deg) {
        const DirectionSteps steps = direction_steps(degrees, half_taps);
        double entropy_sum = 0.0;
        std::int64_t count = 0;
        for (int y = margin; y < gray.height() - margin; ++y) {
            for (int x = margin; x < gray.width() - margin; ++x) {
                for (int j = 0; j < half_taps; ++j) {
                    const int dx = steps.dx[static_cast<std::size_t>(j)];
                    const int dy = steps.dy[static_cast<std::size_t>(j)];
                    products[static_cast<std::size_t>(j)] =
                        gray.at(x + dx, y + dy) * gray.at(x - dx, y - dy);
                }
                double energy = 0.0;
                for (int k = 0; k < n; ++k) {
                    double acc = 0.0;
                    for (int j = 0; j < half_taps; ++j)
                        acc += products[static_cast<std::size_t>(j)] * kernel[static_cast<std::size_t>(j) * n + k];
                    const double w = 4.0 * acc;
                    spectrum[static_cast<std::size_t>(k)] = w * w;
                    energy += w * w;
                }
                double entropy = 1.0;  // flat-spectrum limit for an all-zero window
                if (energy > 0.0) {
                    double cubic = 0.0;
                    for (int k = 0; k < n; ++k) {
                        const double p = spectrum[static_cast<std::size_t>(k)] / energy;
                        cubic += p * p * p;
                    }
                    entropy = -0.5 * std::log2(cubic) * inv_log2_n;
                }
                entropy_sum += entropy;
                ++count;
            }
        }
        result.per_direction_entropy.emplace_back(degrees,
                                                  entropy_sum / static_cast<double>(count));
    }

    double mean = 0.0;
    for (const auto& [deg, value] : result.per_direction_entropy) mean += value;
    mean /= static_cast<double>(result.per_direction_entropy.size());
    double var = 0.0;
    for (const auto& [deg, value] : result.per_direction_entropy)
        var += (value - mean) * (value - mean);
    var /= static_cast<double>(result.per_direction_entropy.size());
    result.anisotropy = std::sqrt(var);
    return result;
}

}  // namespace llb
