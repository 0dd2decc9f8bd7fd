#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "llbench/nss.hpp"
#include "llbench/plane.hpp"

namespace llb {

struct NiqeConfig {
    int patch_size = 96;               // 48 at the second scale
    double sharpness_fraction = 0.75;  // keep patches above this fraction of peak sharpness
    GaussianKernelSpec kernel{};
};

// Multivariate Gaussian of pristine-corpus NSS features.
struct NiqeModel {
    std::vector<double> mean;  // 36
    std::vector<double> cov;   // 36 x 36 row-major
    std::string corpus;
    int patch_size = 96;
    double sharpness_fraction = 0.75;

    int dim() const { return static_cast<int>(mean.size()); }
};

// Per-patch 36-dimensional feature vectors (18 per scale) over the sharp
// patches of one luma plane scaled to [0, 255]. used_fallback is set when
// no patch passes the sharpness selection and all patches are used.
std::vector<std::vector<double>> niqe_patch_features(const PlaneF64& gray255,
                                                     const NiqeConfig& config = {},
                                                     bool* used_fallback = nullptr);

// Mean feature vector over the selected patches.
std::vector<double> niqe_features(const PlaneF64& gray255, const NiqeConfig& config = {},
                                  bool* used_fallback = nullptr);

NiqeModel fit_niqe_model(const std::vector<PlaneF64>& corpus, const NiqeConfig& config = {},
                         const std::string& corpus_description = "");

// sqrt((m1-m2)^T ((S1+S2)/2)^+ (m1-m2)); lower is better.
double niqe_score(const PlaneF64& gray255, const NiqeModel& model, const NiqeConfig& config = {});

// The same distance form between two feature Gaussians.
double mvg_distance(const std::vector<double>& mean1, const std::vector<double>& cov1,
                    const std::vector<double>& mean2, const std::vector<double>& cov2);

void save_niqe_model(const NiqeModel& model, const std::filesystem::path& path);
NiqeModel load_niqe_model(const std::filesystem::path& path);

}  // namespace llb
