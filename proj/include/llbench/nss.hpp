#pragma once

#include <span>

#include "llbench/plane.hpp"

namespace llb {

struct GaussianKernelSpec {
    int size = 7;
    double sigma = 7.0 / 6.0;
};

// Mean-subtracted contrast-normalized coefficients plus the local deviation
// field they were normalized by.
struct MscnField {
    PlaneF64 values;
    PlaneF64 sigma;
};

// MSCN = (I - mu) / (sigma + 1) with mu a 7x7 Gaussian local mean and
// sigma the matching local deviation, replicate borders. Input is luma
// scaled to [0, 255].
MscnField compute_mscn(const PlaneF64& gray255, const GaussianKernelSpec& kernel = {});

struct GgdParams {
    double alpha = 0.0;  // shape, grid [0.2, 10]
    double sigma = 0.0;  // scale: sqrt of the second moment
};

struct AggdParams {
    double alpha = 0.0;
    double sigma_left = 0.0;
    double sigma_right = 0.0;
    double eta = 0.0;  // mean offset
};

// Moment matching over the dense shape grid alpha = 0.2 : 0.001 : 10.
// Throws DataError on degenerate (all-equal) samples.
GgdParams fit_ggd(std::span<const double> samples);

// Asymmetric moment matching; throws DataError when samples do not contain
// both signs.
AggdParams fit_aggd(std::span<const double> samples);

// Non-throwing variants used by the per-patch feature path, which must
// produce finite features for degenerate (e.g. constant) patches. They
// return the grid floor alpha with zero scales, mirroring what the shape
// grid resolves to when the moment ratio is undefined.
GgdParams fit_ggd_lenient(std::span<const double> samples);
AggdParams fit_aggd_lenient(std::span<const double> samples);

}  // namespace llb
