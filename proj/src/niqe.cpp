#include "llbench/niqe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "llbench/error.hpp"
#include "llbench/mathutil.hpp"

namespace llb {

namespace {

constexpr int kFeatureDim = 36;  // 18 per scale, 2 scales

// Neighbor offsets for the H/V/D1/D2 pairwise products.
constexpr int kShiftX[4] = {1, 0, 1, -1};
constexpr int kShiftY[4] = {0, 1, 1, 1};

// 18 features of one MSCN block: GGD (alpha, sigma^2) of the coefficients
// plus AGGD (alpha, eta, sigma_l^2, sigma_r^2) of the four orientation
// products. Products are taken over valid in-block neighbor pairs.
void block_features(const PlaneF64& mscn, int x0, int y0, int size, std::vector<double>& out) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) values.push_back(mscn.at(x0 + x, y0 + y));
    const GgdParams ggd = fit_ggd_lenient(values);
    out.push_back(ggd.alpha);
    out.push_back(ggd.sigma * ggd.sigma);

    std::vector<double> products;
    for (int s = 0; s < 4; ++s) {
        products.clear();
        for (int y = 0; y < size; ++y) {
            const int yy = y + kShiftY[s];
            if (yy < 0 || yy >= size) continue;
            for (int x = 0; x < size; ++x) {
                const int xx = x + kShiftX[s];
                if (xx < 0 || xx >= size) continue;
                products.push_back(mscn.at(x0 + x, y0 + y) * mscn.at(x0 + xx, y0 + yy));
            }
        }
        const AggdParams aggd = fit_aggd_lenient(products);
        out.push_back(aggd.alpha);
        out.push_back(aggd.eta);
        out.push_back(aggd.sigma_left * aggd.sigma_left);
        out.push_back(aggd.sigma_right * aggd.sigma_right);
    }
}

}  // namespace

std::vector<std::vector<double>> niqe_patch_features(const PlaneF64& gray255,
                                                     const NiqeConfig& config, bool* used_fallback) {
    if (used_fallback) *used_fallback = false;
    const int patch = config.patch_size;
    if (gray255.width() < patch || gray255.height() < patch)
        throw DataError("plane " + std::to_string(gray255.width()) + "x" +
                        std::to_string(gray255.height()) + " smaller than the " +
                        std::to_string(patch) + "x" + std::to_string(patch) + " NIQE patch");

    const int blocks_x = gray255.width() / patch;
    const int blocks_y = gray255.height() / patch;

    // Crop to whole patches, then build both scales.
    PlaneF64 cropped(blocks_x * patch, blocks_y * patch);
    for (int y = 0; y < cropped.height(); ++y)
        for (int x = 0; x < cropped.width(); ++x) cropped.at(x, y) = gray255.at(x, y);

    const MscnField scale1 = compute_mscn(cropped, config.kernel);
    const PlaneF64 half = block_mean_plane(cropped, 2);
    const MscnField scale2 = compute_mscn(half, config.kernel);

    // Patch sharpness from the scale-1 deviation field.
    std::vector<double> sharpness(static_cast<std::size_t>(blocks_x) * blocks_y, 0.0);
    double max_sharpness = 0.0;
    for (int by = 0; by < blocks_y; ++by) {
        for (int bx = 0; bx < blocks_x; ++bx) {
            double acc = 0.0;
            for (int y = 0; y < patch; ++y)
                for (int x = 0; x < patch; ++x) acc += scale1.sigma.at(bx * patch + x, by * patch + y);
            const double s = acc / (static_cast<double>(patch) * patch);
            sharpness[static_cast<std::size_t>(by) * blocks_x + bx] = s;
            max_sharpness = std::max(max_sharpness, s);
        }
    }
    const double threshold = config.sharpness_fraction * max_sharpness;
    std::vector<std::pair<int, int>> selected;
    for (int by = 0; by < blocks_y; ++by)
        for (int bx = 0; bx < blocks_x; ++bx)
            if (sharpness[static_cast<std::size_t>(by) * blocks_x + bx] > threshold)
                selected.emplace_back(bx, by);
    if (selected.empty()) {
        if (used_fallback) *used_fallback = true;
        for (int by = 0; by < blocks_y; ++by)
            for (int bx = 0; bx < blocks_x; ++bx) selected.emplace_back(bx, by);
    }

    const int half_patch = patch / 2;
    std::vector<std::vector<double>> features;
    features.reserve(selected.size());
    for (const auto& [bx, by] : selected) {
        std::vector<double> feat;
        feat.reserve(kFeatureDim);
        block_features(scale1.values, bx * patch, by * patch, patch, feat);
        block_features(scale2.values, bx * half_patch, by * half_patch, half_patch, feat);
        features.push_back(std::move(feat));
    }
    return features;
}

std::vector<double> niqe_features(const PlaneF64& gray255, const NiqeConfig& config,
                                  bool* used_fallback) {
    const auto patches = niqe_patch_features(gray255, config, used_fallback);
    std::vector<double> mean(kFeatureDim, 0.0);
    for (const auto& feat : patches)
        for (int i = 0; i < kFeatureDim; ++i) mean[static_cast<std::size_t>(i)] += feat[static_cast<std::size_t>(i)];
    for (double& v : mean) v /= static_cast<double>(patches.size());
    return mean;
}

namespace {

void mean_and_cov(const std::vector<std::vector<double>>& rows, std::vector<double>& mean,
                  std::vector<double>& cov) {
    const std::size_t n = rows.size();
    mean.assign(kFeatureDim, 0.0);
    cov.assign(static_cast<std::size_t>(kFeatureDim) * kFeatureDim, 0.0);
    for (const auto& row : rows)
        for (int i = 0; i < kFeatureDim; ++i) mean[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)];
    for (double& v : mean) v /= static_cast<double>(n);
    if (n < 2) return;  // covariance of a single patch is taken as zero
    for (const auto& row : rows) {
        for (int i = 0; i < kFeatureDim; ++i) {
            const double di = row[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
            for (int j = i; j < kFeatureDim; ++j) {
                const double dj = row[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)];
                cov[static_cast<std::size_t>(i) * kFeatureDim + j] += di * dj;
            }
        }
    }
    const double denom = static_cast<double>(n - 1);
    for (int i = 0; i < kFeatureDim; ++i)
        for (int j = i; j < kFeatureDim; ++j) {
            const double v = cov[static_cast<std::size_t>(i) * kFeatureDim + j] / denom;
            cov[static_cast<std::size_t>(i) * kFeatureDim + j] = v;
            cov[static_cast<std::size_t>(j) * kFeatureDim + i] = v;
        }
}

}  // namespace

NiqeModel fit_niqe_model(const std::vector<PlaneF64>& corpus, const NiqeConfig& config,
                         const std::string& corpus_description) {
    if (corpus.size() < 2) throw DataError("NIQE model fitting needs at least 2 planes");
    std::vector<std::vector<double>> pooled;
    for (const PlaneF64& plane : corpus) {
        auto patches = niqe_patch_features(plane, config);
        pooled.insert(pooled.end(), std::make_move_iterator(patches.begin()),
                      std::make_move_iterator(patches.end()));
    }
    NiqeModel model;
    model.patch_size = config.patch_size;
    model.sharpness_fraction = config.sharpness_fraction;
    model.corpus = corpus_description;
    mean_and_cov(pooled, model.mean, model.cov);
    return model;
}

double mvg_distance(const std::vector<double>& mean1, const std::vector<double>& cov1,
                    const std::vector<double>& mean2, const std::vector<double>& cov2) {
    const int n = static_cast<int>(mean1.size());
    if (mean2.size() != mean1.size() || cov1.size() != mean1.size() * mean1.size() ||
        cov2.size() != cov1.size())
        throw DataError("mvg_distance: dimension mismatch");
    std::vector<double> pooled(cov1.size());
    for (std::size_t i = 0; i < cov1.size(); ++i) pooled[i] = 0.5 * (cov1[i] + cov2[i]);
    const std::vector<double> inv = pinv_symmetric(pooled, n);
    std::vector<double> d(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = mean1[static_cast<std::size_t>(i)] - mean2[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += inv[static_cast<std::size_t>(i) * n + j] * d[static_cast<std::size_t>(j)];
        acc += d[static_cast<std::size_t>(i)] * row;
    }
    return std::sqrt(std::max(acc, 0.0));
}

double niqe_score(const PlaneF64& gray255, const NiqeModel& model, const NiqeConfig& config) {
    if (model.dim() != kFeatureDim || model.cov.size() != static_cast<std::size_t>(kFeatureDim) * kFeatureDim)
        throw ConfigError("NIQE model has wrong dimensions");
    NiqeConfig effective = config;
    effective.patch_size = model.patch_size;
    effective.sharpness_fraction = model.sharpness_fraction;
    const auto patches = niqe_patch_features(gray255, effective);
    std::vector<double> mean;
    std::vector<double> cov;
    mean_and_cov(patches, mean, cov);
    return mvg_distance(model.mean, model.cov, mean, cov);
}

void save_niqe_model(const NiqeModel& model, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["mean"] = model.mean;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < model.dim(); ++i)
        rows.emplace_back(model.cov.begin() + static_cast<std::ptrdiff_t>(i) * model.dim(),
                          model.cov.begin() + static_cast<std::ptrdiff_t>(i + 1) * model.dim());
    j["cov"] = rows;
    j["meta"] = {{"corpus", model.corpus},
                 {"patch_size", model.patch_size},
                 {"sharpness_fraction", model.sharpness_fraction},
                 {"feature_dim", model.dim()}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

NiqeModel load_niqe_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad NIQE model JSON in " + path.string() + ": " + e.what());
    }
    NiqeModel model;
    model.mean = j.at("mean").get<std::vector<double>>();
    for (const auto& row : j.at("cov")) {
        const auto values = row.get<std::vector<double>>();
        model.cov.insert(model.cov.end(), values.begin(), values.end());
    }
    if (j.contains("meta")) {
        const auto& meta = j["meta"];
        model.corpus = meta.value("corpus", "");
        model.patch_size = meta.value("patch_size", 96);
        model.sharpness_fraction = meta.value("sharpness_fraction", 0.75);
    }
    if (model.mean.size() != kFeatureDim ||
        model.cov.size() != static_cast<std::size_t>(kFeatureDim) * kFeatureDim)
        throw FormatError("NIQE model in " + path.string() + " has wrong dimensions");
    return model;
}

}  // namespace llb
