#pragma once

#include <span>
#include <vector>

#include "llbench/plane.hpp"

namespace llb {

// Eigendecomposition of a symmetric n x n matrix (row-major) via cyclic
// Jacobi rotations. vectors is row-major with eigenvector i in row i.
struct SymmetricEigen {
    std::vector<double> values;
    std::vector<double> vectors;
};
SymmetricEigen eigen_symmetric(std::span<const double> matrix, int n);

// Moore-Penrose pseudo-inverse of a symmetric matrix; eigenvalues with
// |lambda| <= rel_cutoff * max|lambda| are treated as zero.
std::vector<double> pinv_symmetric(std::span<const double> matrix, int n,
                                   double rel_cutoff = 1e-10);

// Gaussian elimination with partial pivoting; throws DataError on a
// singular system.
std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b, int n);

// Spearman rank correlation with average ranks for ties. defined is set to
// false (and 0 returned) when either side has zero rank variance.
double spearman(std::span<const double> x, std::span<const double> y, bool* defined = nullptr);

// f x f block mean; trailing partial blocks are dropped.
PlaneF64 block_mean_plane(const PlaneF64& in, int f);

double plane_mean(const PlaneF64& p);
double plane_variance(const PlaneF64& p);  // population variance

}  // namespace llb
