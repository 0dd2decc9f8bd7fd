#include "llbench/bd_metric.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "llbench/mathutil.hpp"

namespace llb {

void RQCurve::validate() const {
    for (const RQPoint& p : points) {
        if (!(p.rate_kbps > 0.0)) throw DataError("curve '" + label + "' has a nonpositive rate");
        if (!std::isfinite(p.quality)) throw DataError("curve '" + label + "' has a non-finite quality");
    }
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i].rate_kbps > points[i - 1].rate_kbps))
            throw DataError("curve '" + label + "' rates are not strictly increasing");
}

const char* bd_method_name(BdMethod method) {
    return method == BdMethod::CubicFit ? "cubic-fit" : "pchip";
}

BdMethod parse_bd_method(const std::string& name) {
    if (name == "cubic" || name == "cubic-fit") return BdMethod::CubicFit;
    if (name == "pchip") return BdMethod::Pchip;
    throw ConfigError("unknown BD interpolation '" + name + "'");
}

namespace {

// Interpolant of y over x with an analytic integral.
class Interpolant {
public:
    virtual ~Interpolant() = default;
    virtual double integrate(double lo, double hi) const = 0;
};

// Least-squares polynomial in centered/scaled x: cubic for 4+ points
// (exact interpolation at exactly 4), quadratic when only 3 points are
// allowed in.
class CubicFit : public Interpolant {
public:
    CubicFit(const std::vector<double>& x, const std::vector<double>& y) {
        const int n = static_cast<int>(x.size());
        degree_ = std::min(3, n - 1);
        center_ = std::accumulate(x.begin(), x.end(), 0.0) / n;
        scale_ = 0.0;
        for (double v : x) scale_ = std::max(scale_, std::abs(v - center_));
        if (scale_ == 0.0) scale_ = 1.0;

        const int terms = degree_ + 1;
        std::vector<double> sx(static_cast<std::size_t>(2 * degree_ + 1), 0.0);
        std::vector<double> sy(static_cast<std::size_t>(terms), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double t = (x[i] - center_) / scale_;
            double p = 1.0;
            for (int k = 0; k <= 2 * degree_; ++k) {
                sx[static_cast<std::size_t>(k)] += p;
                if (k <= degree_) sy[static_cast<std::size_t>(k)] += p * y[i];
                p *= t;
            }
        }
        std::vector<double> a(static_cast<std::size_t>(terms) * terms);
        for (int r = 0; r < terms; ++r)
            for (int c = 0; c < terms; ++c)
                a[static_cast<std::size_t>(r) * terms + c] = sx[static_cast<std::size_t>(r + c)];
        coef_ = solve_linear(std::move(a), std::move(sy), terms);
    }

    double integrate(double lo, double hi) const override {
        return antiderivative(hi) - antiderivative(lo);
    }

private:
    double antiderivative(double x) const {
        const double t = (x - center_) / scale_;
        // integral dx = scale * integral dt
        double acc = 0.0;
        double p = t;
        for (std::size_t k = 0; k < coef_.size(); ++k) {
            acc += coef_[k] * p / static_cast<double>(k + 1);
            p *= t;
        }
        return scale_ * acc;
    }

    int degree_ = 3;
    double center_ = 0.0;
    double scale_ = 1.0;
    std::vector<double> coef_;
};

// Monotone piecewise-cubic Hermite (Fritsch-Carlson derivatives).
class Pchip : public Interpolant {
public:
    Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        std::vector<double> h(n - 1);
        std::vector<double> delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            delta[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        d_.assign(n, 0.0);
        if (n == 2) {
            d_[0] = d_[1] = delta[0];
        } else {
            d_[0] = edge_derivative(h[0], h[1], delta[0], delta[1]);
            d_[n - 1] = edge_derivative(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
            for (std::size_t i = 1; i + 1 < n; ++i) {
                if (delta[i - 1] * delta[i] <= 0.0) {
                    d_[i] = 0.0;
                } else {
                    const double w1 = 2.0 * h[i] + h[i - 1];
                    const double w2 = h[i] + 2.0 * h[i - 1];
                    d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
        }
    }

    double integrate(double lo, double hi) const override {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
            const double a = std::max(lo, x_[i]);
            const double b = std::min(hi, x_[i + 1]);
            if (a >= b) continue;
            acc += segment_integral(i, a, b);
        }
        return acc;
    }

private:
    static double edge_derivative(double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0) return 0.0;
        if (d0 * d1 < 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return d;
    }

    double segment_integral(std::size_t i, double a, double b) const {
        const double h = x_[i + 1] - x_[i];
        const double delta = (y_[i + 1] - y_[i]) / h;
        const double c1 = d_[i];
        const double c2 = (3.0 * delta - 2.0 * d_[i] - d_[i + 1]) / h;
        const double c3 = (d_[i] + d_[i + 1] - 2.0 * delta) / (h * h);
        auto anti = [&](double x) {
            const double s = x - x_[i];
            return y_[i] * s + c1 * s * s / 2.0 + c2 * s * s * s / 3.0 + c3 * s * s * s * s / 4.0;
        };
        return anti(b) - anti(a);
    }

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> d_;
};

struct Axis {
    std::vector<double> x;  // strictly increasing
    std::vector<double> y;
};

// Points sorted by the chosen x coordinate, x required strictly monotone.
Axis make_axis(const RQCurve& curve, bool quality_on_x) {
    curve.validate();
    std::vector<RQPoint> pts = curve.points;
    if (quality_on_x) {
        // Quality must be strictly monotone in rate; ties are rejected.
        bool increasing = true;
        bool decreasing = true;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (!(pts[i].quality > pts[i - 1].quality)) increasing = false;
            if (!(pts[i].quality < pts[i - 1].quality)) decreasing = false;
        }
        if (!increasing && !decreasing)
            throw DataError("curve '" + curve.label +
                            "' quality is not strictly monotone in rate; BD is undefined");
        if (decreasing) std::reverse(pts.begin(), pts.end());
    }
    Axis axis;
    for (const RQPoint& p : pts) {
        axis.x.push_back(quality_on_x ? p.quality : std::log10(p.rate_kbps));
        axis.y.push_back(quality_on_x ? std::log10(p.rate_kbps) : p.quality);
    }
    return axis;
}

std::unique_ptr<Interpolant> make_interpolant(const Axis& axis, BdMethod method) {
    if (method == BdMethod::CubicFit) return std::make_unique<CubicFit>(axis.x, axis.y);
    return std::make_unique<Pchip>(axis.x, axis.y);
}

struct Overlap {
    double lo;
    double hi;
};

Overlap overlap_of(const Axis& a, const Axis& b) {
    const double lo = std::max(a.x.front(), b.x.front());
    const double hi = std::min(a.x.back(), b.x.back());
    if (!(hi > lo)) throw DataError("rate-quality curves do not overlap; BD is undefined");
    return {lo, hi};
}

void require_points(const RQCurve& curve, int min_points) {
    if (min_points < 3) throw ConfigError("BD needs at least 3 points per curve");
    if (static_cast<int>(curve.points.size()) < min_points)
        throw DataError("curve '" + curve.label + "' has " +
                        std::to_string(curve.points.size()) + " points, need >= " +
                        std::to_string(min_points));
}

}  // namespace

BdResult bd_rate(const RQCurve& anchor, const RQCurve& test, BdMethod method, int min_points) {
    require_points(anchor, min_points);
    require_points(test, min_points);
    const Axis axis_anchor = make_axis(anchor, /*quality_on_x=*/true);
    const Axis axis_test = make_axis(test, /*quality_on_x=*/true);
    const Overlap ov = overlap_of(axis_anchor, axis_test);
    const auto f_anchor = make_interpolant(axis_anchor, method);
    const auto f_test = make_interpolant(axis_test, method);
    const double avg_log_ratio =
        (f_test->integrate(ov.lo, ov.hi) - f_anchor->integrate(ov.lo, ov.hi)) / (ov.hi - ov.lo);
    BdResult result;
    result.bd_rate_pct = 100.0 * (std::pow(10.0, avg_log_ratio) - 1.0);
    result.overlap_lo = ov.lo;
    result.overlap_hi = ov.hi;
    result.method = method;
    return result;
}

BdResult bd_quality(const RQCurve& anchor, const RQCurve& test, BdMethod method, int min_points) {
    require_points(anchor, min_points);
    require_points(test, min_points);
    const Axis axis_anchor = make_axis(anchor, /*quality_on_x=*/false);
    const Axis axis_test = make_axis(test, /*quality_on_x=*/false);
    const Overlap ov = overlap_of(axis_anchor, axis_test);
    const auto f_anchor = make_interpolant(axis_anchor, method);
    const auto f_test = make_interpolant(axis_test, method);
    BdResult result;
    result.bd_quality =
        (f_test->integrate(ov.lo, ov.hi) - f_anchor->integrate(ov.lo, ov.hi)) / (ov.hi - ov.lo);
    result.overlap_lo = ov.lo;
    result.overlap_hi = ov.hi;
    result.method = method;
    return result;
}

MonotonicityReport check_monotonicity(const RQCurve& curve) {
    curve.validate();
    if (curve.points.size() < 2) throw DataError("monotonicity check needs at least 2 points");
    MonotonicityReport report;
    report.strictly_increasing = true;
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        if (!(curve.points[i].quality > curve.points[i - 1].quality))
            report.strictly_increasing = false;
    std::vector<double> rates;
    std::vector<double> qualities;
    for (const RQPoint& p : curve.points) {
        rates.push_back(p.rate_kbps);
        qualities.push_back(p.quality);
    }
    report.spearman = spearman(qualities, rates, &report.spearman_defined);
    return report;
}

}  // namespace llb
