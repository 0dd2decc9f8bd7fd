#include "llbench/nss.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "llbench/error.hpp"

namespace llb {

namespace {

std::vector<double> gaussian_taps(int size, double sigma) {
    std::vector<double> taps(static_cast<std::size_t>(size));
    const double center = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - center;
        taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += taps[static_cast<std::size_t>(i)];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

// Separable convolution with replicate borders; output matches input size.
PlaneF64 filter_replicate(const PlaneF64& in, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int r = k / 2;
    const int w = in.width();
    const int h = in.height();
    PlaneF64 horiz(w, h);
    for (int y = 0; y < h; ++y) {
        const double* src = in.row(y);
        double* dst = horiz.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) {
                int xx = x + i - r;
                xx = xx < 0 ? 0 : (xx >= w ? w - 1 : xx);
                acc += taps[static_cast<std::size_t>(i)] * src[xx];
            }
            dst[x] = acc;
        }
    }
    PlaneF64 out(w, h);
    for (int y = 0; y < h; ++y) {
        double* dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) {
                int yy = y + i - r;
                yy = yy < 0 ? 0 : (yy >= h ? h - 1 : yy);
                acc += taps[static_cast<std::size_t>(i)] * horiz.at(x, yy);
            }
            dst[x] = acc;
        }
    }
    return out;
}

constexpr double kGridLo = 0.2;
constexpr double kGridStep = 0.001;
constexpr int kGridCount = 9801;  // 0.2 .. 10.0 inclusive

// rho_ggd(a)  = G(1/a) G(3/a) / G(2/a)^2   matched against E[x^2]/E[|x|]^2
// rho_aggd(a) = G(2/a)^2 / (G(1/a) G(3/a)) matched against the normalized
//               asymmetric ratio
const std::vector<double>& ggd_ratio_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g(kGridCount);
        for (int i = 0; i < kGridCount; ++i) {
            const double a = kGridLo + kGridStep * i;
            g[static_cast<std::size_t>(i)] =
                std::tgamma(1.0 / a) * std::tgamma(3.0 / a) /
                (std::tgamma(2.0 / a) * std::tgamma(2.0 / a));
        }
        return g;
    }();
    return grid;
}

const std::vector<double>& aggd_ratio_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g(kGridCount);
        const std::vector<double>& ggd = ggd_ratio_grid();
        for (int i = 0; i < kGridCount; ++i) g[static_cast<std::size_t>(i)] = 1.0 / ggd[static_cast<std::size_t>(i)];
        return g;
    }();
    return grid;
}

double grid_alpha(int index) { return kGridLo + kGridStep * index; }

int nearest_grid_index(const std::vector<double>& grid, double target) {
    int best = 0;
    double best_diff = std::abs(grid[0] - target);
    for (int i = 1; i < kGridCount; ++i) {
        const double diff = std::abs(grid[static_cast<std::size_t>(i)] - target);
        if (diff < best_diff) {
            best_diff = diff;
            best = i;
        }
    }
    return best;
}

struct AggdMoments {
    double sigma_left = 0.0;
    double sigma_right = 0.0;
    double rhat_norm = 0.0;
    bool defined = false;
    bool both_signs = false;
};

AggdMoments aggd_moments(std::span<const double> samples) {
    AggdMoments m;
    std::size_t neg_count = 0;
    std::size_t pos_count = 0;
    double neg_sq = 0.0;
    double pos_sq = 0.0;
    double abs_sum = 0.0;
    for (double v : samples) {
        if (v < 0.0) {
            ++neg_count;
            neg_sq += v * v;
            abs_sum -= v;
        } else if (v > 0.0) {
            ++pos_count;
            pos_sq += v * v;
            abs_sum += v;
        }
    }
    m.both_signs = neg_count > 0 && pos_count > 0;
    if (neg_count > 0) m.sigma_left = std::sqrt(neg_sq / static_cast<double>(neg_count));
    if (pos_count > 0) m.sigma_right = std::sqrt(pos_sq / static_cast<double>(pos_count));
    const double n = static_cast<double>(samples.size());
    const double second = (neg_sq + pos_sq) / n;
    if (second > 0.0 && m.sigma_left > 0.0 && m.sigma_right > 0.0) {
        const double gamma_hat = m.sigma_left / m.sigma_right;
        const double rhat = (abs_sum / n) * (abs_sum / n) / second;
        m.rhat_norm = rhat * (gamma_hat * gamma_hat * gamma_hat + 1.0) * (gamma_hat + 1.0) /
                      ((gamma_hat * gamma_hat + 1.0) * (gamma_hat * gamma_hat + 1.0));
        m.defined = true;
    }
    return m;
}

AggdParams aggd_from_moments(const AggdMoments& m) {
    AggdParams p;
    const int idx = m.defined ? nearest_grid_index(aggd_ratio_grid(), m.rhat_norm) : 0;
    p.alpha = grid_alpha(idx);
    p.sigma_left = m.sigma_left;
    p.sigma_right = m.sigma_right;
    const double a = p.alpha;
    const double ratio = std::sqrt(std::tgamma(1.0 / a) / std::tgamma(3.0 / a));
    p.eta = (p.sigma_right - p.sigma_left) * (std::tgamma(2.0 / a) / std::tgamma(1.0 / a)) * ratio;
    return p;
}

GgdParams ggd_from_moments(double second_moment, double abs_mean) {
    GgdParams p;
    p.sigma = std::sqrt(second_moment);
    if (second_moment <= 0.0 || abs_mean <= 0.0) {
        p.alpha = grid_alpha(0);  // undefined ratio resolves to the grid floor
        return p;
    }
    const double rho = second_moment / (abs_mean * abs_mean);
    p.alpha = grid_alpha(nearest_grid_index(ggd_ratio_grid(), rho));
    return p;
}

}  // namespace

MscnField compute_mscn(const PlaneF64& gray255, const GaussianKernelSpec& kernel) {
    if (gray255.width() < kernel.size || gray255.height() < kernel.size)
        throw DataError("plane " + std::to_string(gray255.width()) + "x" +
                        std::to_string(gray255.height()) + " smaller than the " +
                        std::to_string(kernel.size) + "x" + std::to_string(kernel.size) +
                        " MSCN kernel");
    const std::vector<double> taps = gaussian_taps(kernel.size, kernel.sigma);
    const PlaneF64 mu = filter_replicate(gray255, taps);
    PlaneF64 sq(gray255.width(), gray255.height());
    for (std::size_t i = 0; i < gray255.size(); ++i)
        sq.data()[i] = gray255.data()[i] * gray255.data()[i];
    const PlaneF64 mu_of_sq = filter_replicate(sq, taps);

    MscnField field;
    field.values = PlaneF64(gray255.width(), gray255.height());
    field.sigma = PlaneF64(gray255.width(), gray255.height());
    for (std::size_t i = 0; i < gray255.size(); ++i) {
        const double m = mu.data()[i];
        const double sigma = std::sqrt(std::abs(mu_of_sq.data()[i] - m * m));
        field.sigma.data()[i] = sigma;
        field.values.data()[i] = (gray255.data()[i] - m) / (sigma + 1.0);
    }
    return field;
}

GgdParams fit_ggd(std::span<const double> samples) {
    if (samples.size() < 100) throw DataError("GGD fit needs at least 100 samples");
    double second = 0.0;
    double abs_mean = 0.0;
    const double n = static_cast<double>(samples.size());
    double first = 0.0;
    for (double v : samples) {
        second += v * v;
        abs_mean += std::abs(v);
        first += v;
    }
    second /= n;
    abs_mean /= n;
    first /= n;
    const double variance = second - first * first;
    if (!(variance > 0.0)) throw DataError("GGD fit is degenerate: samples have zero variance");
    return ggd_from_moments(second, abs_mean);
}

GgdParams fit_ggd_lenient(std::span<const double> samples) {
    double second = 0.0;
    double abs_mean = 0.0;
    const double n = samples.empty() ? 1.0 : static_cast<double>(samples.size());
    for (double v : samples) {
        second += v * v;
        abs_mean += std::abs(v);
    }
    return ggd_from_moments(second / n, abs_mean / n);
}

AggdParams fit_aggd(std::span<const double> samples) {
    if (samples.empty()) throw DataError("AGGD fit needs samples");
    const AggdMoments m = aggd_moments(samples);
    if (!m.both_signs)
        throw DataError("AGGD fit needs samples of both signs");
    return aggd_from_moments(m);
}

AggdParams fit_aggd_lenient(std::span<const double> samples) {
    return aggd_from_moments(aggd_moments(samples));
}

}  // namespace llb
