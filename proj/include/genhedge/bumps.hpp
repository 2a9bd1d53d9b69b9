#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "genhedge/curve.hpp"
#include "genhedge/lattice.hpp"

namespace genhedge {

/// The mollifier profile m(u) = exp(-1/(1 - 16 u^2)) on |u| < 1/4, with
/// closed-form first and second derivatives. Underflows cleanly to 0 at the
/// support edges.
struct Mollifier {
    static double value(double u) {
        const double d = 1.0 - 16.0 * u * u;
        if (d <= 0.0) return 0.0;
        return std::exp(-1.0 / d);
    }
    static double d1(double u) {
        const double d = 1.0 - 16.0 * u * u;
        if (d <= 0.0) return 0.0;
        const double phi1 = -32.0 * u / (d * d);
        return phi1 * std::exp(-1.0 / d);
    }
    static double d2(double u) {
        const double d = 1.0 - 16.0 * u * u;
        if (d <= 0.0) return 0.0;
        const double d2i = 1.0 / (d * d);
        const double phi1 = -32.0 * u * d2i;
        const double phi2 = -32.0 * d2i - 2048.0 * u * u * d2i / d;
        return (phi2 + phi1 * phi1) * std::exp(-1.0 / d);
    }
};

/// Orthonormal bump family h_i centered at the integer i with
/// supp h_i = [i - 1/4, i + 1/4] and ||h_i||_{H^1} = 1. Disjoint supports
/// make the Gram matrix the identity; all h_i are translates of h_1.
class BumpBasis {
public:
    BumpBasis(LatticePtr lat, int count) : lat_(std::move(lat)) {
        if (count < 1) throw std::domain_error("BumpBasis: need at least one bump");
        if (lat_->x_max() < count + 0.25)
            throw config_error("BumpBasis: lattice domain too short for requested bumps");
        // Normalize the profile once in H^1.
        CurveFunction raw = bump_curve(1.0, 1.0);
        norm_scale_ = 1.0 / norm_h(raw, 1);
        bumps_.reserve(static_cast<size_t>(count));
        for (int i = 1; i <= count; ++i)
            bumps_.push_back(bump_curve(static_cast<double>(i), norm_scale_));
    }

    int count() const { return static_cast<int>(bumps_.size()); }
    const CurveFunction& bump(int i) const { return bumps_.at(static_cast<size_t>(i - 1)); }
    const std::vector<CurveFunction>& bumps() const { return bumps_; }
    const LatticePtr& lattice() const { return lat_; }
    double normalization() const { return norm_scale_; }

    /// Analytic evaluators for h_i and its first two derivatives.
    double value(int i, double x) const { return norm_scale_ * Mollifier::value(x - i); }
    double deriv1(int i, double x) const { return norm_scale_ * Mollifier::d1(x - i); }
    double deriv2(int i, double x) const { return norm_scale_ * Mollifier::d2(x - i); }

private:
    CurveFunction bump_curve(double center, double scale) const {
        RealFn f = [center, scale](double x) { return scale * Mollifier::value(x - center); };
        RealFn f1 = [center, scale](double x) { return scale * Mollifier::d1(x - center); };
        RealFn f2 = [center, scale](double x) { return scale * Mollifier::d2(x - center); };
        return CurveFunction::analytic(lat_, f, f1, f2, center - 0.25, center + 0.25);
    }

    LatticePtr lat_;
    double norm_scale_ = 1.0;
    std::vector<CurveFunction> bumps_;
};

/// Build the N-bump basis (odd indices are the translated base bump from the
/// construction, even indices complete the family at even centers).
inline std::shared_ptr<const BumpBasis> build_bumps(LatticePtr lat, int n) {
    if (n < 1) throw std::domain_error("build_bumps: N must be >= 1");
    return std::make_shared<const BumpBasis>(std::move(lat), n);
}

/// The decaying exponential x -> exp(-a x) as a curve (any real a).
inline CurveFunction exponential_curve(const LatticePtr& lat, double a) {
    RealFn f = [a](double x) { return std::exp(-a * x); };
    RealFn f1 = [a](double x) { return -a * std::exp(-a * x); };
    RealFn f2 = [a](double x) { return a * a * std::exp(-a * x); };
    return CurveFunction::analytic(lat, f, f1, f2, 0.0, lat->x_max());
}

} // namespace genhedge
