#include "llbench/mathutil.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llbench/error.hpp"

namespace llb {

SymmetricEigen eigen_symmetric(std::span<const double> matrix, int n) {
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    if (matrix.size() != nn) throw DataError("eigen_symmetric: matrix size does not match n");
    std::vector<double> a(matrix.begin(), matrix.end());
    std::vector<double> v(nn, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

    auto at = [&](std::vector<double>& m, int r, int c) -> double& {
        return m[static_cast<std::size_t>(r) * n + c];
    };

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(a, p, q) * at(a, p, q);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(a, p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double app = at(a, p, p);
                const double aqq = at(a, q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(a, k, p);
                    const double akq = at(a, k, q);
                    at(a, k, p) = c * akp - s * akq;
                    at(a, k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(a, p, k);
                    const double aqk = at(a, q, k);
                    at(a, p, k) = c * apk - s * aqk;
                    at(a, q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = at(v, k, p);
                    const double vkq = at(v, k, q);
                    at(v, k, p) = c * vkp - s * vkq;
                    at(v, k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    SymmetricEigen result;
    result.values.resize(static_cast<std::size_t>(n));
    result.vectors.resize(nn);
    for (int i = 0; i < n; ++i) {
        result.values[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i) * n + i];
        for (int k = 0; k < n; ++k)
            result.vectors[static_cast<std::size_t>(i) * n + k] = v[static_cast<std::size_t>(k) * n + i];
    }
    return result;
}

std::vector<double> pinv_symmetric(std::span<const double> matrix, int n, double rel_cutoff) {
    const SymmetricEigen eig = eigen_symmetric(matrix, n);
    double max_abs = 0.0;
    for (double lambda : eig.values) max_abs = std::max(max_abs, std::abs(lambda));
    const double cutoff = max_abs * rel_cutoff;
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double lambda = eig.values[static_cast<std::size_t>(i)];
        if (std::abs(lambda) <= cutoff || lambda == 0.0) continue;
        const double inv = 1.0 / lambda;
        const double* vec = eig.vectors.data() + static_cast<std::size_t>(i) * n;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                out[static_cast<std::size_t>(r) * n + c] += inv * vec[r] * vec[c];
    }
    return out;
}

std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b, int n) {
    if (a.size() != static_cast<std::size_t>(n) * n || b.size() != static_cast<std::size_t>(n))
        throw DataError("solve_linear: dimension mismatch");
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[static_cast<std::size_t>(r) * n + col]) >
                std::abs(a[static_cast<std::size_t>(pivot) * n + col]))
                pivot = r;
        if (std::abs(a[static_cast<std::size_t>(pivot) * n + col]) < 1e-300)
            throw DataError("solve_linear: singular system");
        if (pivot != col) {
            for (int c = 0; c < n; ++c)
                std::swap(a[static_cast<std::size_t>(col) * n + c],
                          a[static_cast<std::size_t>(pivot) * n + c]);
            std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
        }
        const double diag = a[static_cast<std::size_t>(col) * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double factor = a[static_cast<std::size_t>(r) * n + col] / diag;
            if (factor == 0.0) continue;
            for (int c = col; c < n; ++c)
                a[static_cast<std::size_t>(r) * n + c] -= factor * a[static_cast<std::size_t>(col) * n + c];
            b[static_cast<std::size_t>(r)] -= factor * b[static_cast<std::size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < n; ++c)
            acc -= a[static_cast<std::size_t>(r) * n + c] * x[static_cast<std::size_t>(c)];
        x[static_cast<std::size_t>(r)] = acc / a[static_cast<std::size_t>(r) * n + r];
    }
    return x;
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y, bool* defined) {
    if (defined) *defined = false;
    if (x.size() != y.size() || x.size() < 2) return 0.0;
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    if (defined) *defined = true;
    return sxy / std::sqrt(sxx * syy);
}

PlaneF64 block_mean_plane(const PlaneF64& in, int f) {
    const int out_w = in.width() / f;
    const int out_h = in.height() / f;
    PlaneF64 out(out_w, out_h);
    const double inv = 1.0 / (f * f);
    for (int by = 0; by < out_h; ++by) {
        for (int bx = 0; bx < out_w; ++bx) {
            double acc = 0.0;
            for (int y = 0; y < f; ++y) {
                const double* row = in.row(by * f + y);
                for (int x = 0; x < f; ++x) acc += row[bx * f + x];
            }
            out.at(bx, by) = acc * inv;
        }
    }
    return out;
}

double plane_mean(const PlaneF64& p) {
    double acc = 0.0;
    for (double v : p.samples()) acc += v;
    return p.size() == 0 ? 0.0 : acc / static_cast<double>(p.size());
}

double plane_variance(const PlaneF64& p) {
    if (p.size() == 0) return 0.0;
    const double mean = plane_mean(p);
    double acc = 0.0;
    for (double v : p.samples()) acc += (v - mean) * (v - mean);
    return acc / static_cast<double>(p.size());
}

}  // namespace llb
