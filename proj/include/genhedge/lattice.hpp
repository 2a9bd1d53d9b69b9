#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "genhedge/errors.hpp"

namespace genhedge {

/// Uniform node lattice on [0, x_max] with a composite Boole quadrature rule.
///
/// Panels are 4 intervals wide (polynomial exactness 5, width 4h), so the
/// interval count must be a multiple of 4. Node weights are position-fixed,
/// which lets compactly supported integrands be summed over their support
/// window only while staying bit-identical with the full-domain sum.
class Lattice {
public:
    Lattice(double x_max, int points_per_unit)
        : x_max_(x_max), h_(1.0 / points_per_unit) {
        if (x_max <= 0.0 || points_per_unit <= 0)
            throw config_error("Lattice: x_max and points_per_unit must be positive");
        const double n_real = x_max * points_per_unit;
        n_intervals_ = static_cast<int>(std::llround(n_real));
        if (std::abs(n_real - n_intervals_) > 1e-9)
            throw config_error("Lattice: x_max must be an integer multiple of the node spacing");
        if (n_intervals_ % 4 != 0)
            throw config_error("Lattice: interval count must be a multiple of 4 (Boole panels)");
        weights_.resize(n_intervals_ + 1, 0.0);
        const double c = 2.0 * h_ / 45.0;
        for (int p = 0; p < n_intervals_ / 4; ++p) {
            const int b = 4 * p;
            weights_[b + 0] += 7.0 * c;
            weights_[b + 1] += 32.0 * c;
            weights_[b + 2] += 12.0 * c;
            weights_[b + 3] += 32.0 * c;
            weights_[b + 4] += 7.0 * c;
        }
    }

    double x_max() const { return x_max_; }
    double spacing() const { return h_; }
    int size() const { return n_intervals_ + 1; }
    double node(int i) const { return i * h_; }
    std::span<const double> weights() const { return weights_; }

    /// Nearest node index for x, clamped to the domain.
    int index_near(double x) const {
        int i = static_cast<int>(std::llround(x / h_));
        if (i < 0) i = 0;
        if (i > n_intervals_) i = n_intervals_;
        return i;
    }

    /// True when x sits on a node up to round-off.
    bool aligned(double x) const {
        return std::abs(x / h_ - std::llround(x / h_)) < 1e-9;
    }

    std::vector<double> sample(const std::function<double(double)>& f) const {
        std::vector<double> v(size());
        for (int i = 0; i < size(); ++i) v[i] = f(node(i));
        return v;
    }

    double integrate(std::span<const double> f) const {
        double s = 0.0;
        for (int i = 0; i < size(); ++i) s += weights_[i] * f[i];
        return s;
    }

    /// Integral of a product, restricted to node range [i0, i1] (inclusive).
    /// Exact for the full-domain rule when the product vanishes outside.
    double integrate_product(std::span<const double> f, std::span<const double> g,
                             int i0, int i1) const {
        if (i0 < 0) i0 = 0;
        if (i1 > n_intervals_) i1 = n_intervals_;
        double s = 0.0;
        for (int i = i0; i <= i1; ++i) s += weights_[i] * f[i] * g[i];
        return s;
    }

    double integrate_product(std::span<const double> f, std::span<const double> g) const {
        return integrate_product(f, g, 0, n_intervals_);
    }

    /// Running integral S[i] = int_0^{x_i} f, fourth-order (Simpson pairs with
    /// cubic half-step correction on odd nodes).
    std::vector<double> prefix_integral(std::span<const double> f) const {
        std::vector<double> s(size(), 0.0);
        for (int i = 0; i + 2 < size(); i += 2) {
            s[i + 1] = s[i] + h_ / 12.0 * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]);
            s[i + 2] = s[i] + h_ / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
        }
        return s;
    }

    /// Fourth-order finite differences of lattice samples.
    std::vector<double> fd_derivative(std::span<const double> f) const {
        const int n = size();
        std::vector<double> d(n);
        for (int i = 2; i < n - 2; ++i)
            d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h_);
        auto edge = [&](int i, int dir) {
            // 5-point one-sided stencil, order 4
            const double s = dir;
            return s * (-25.0 * f[i] + 48.0 * f[i + dir] - 36.0 * f[i + 2 * dir]
                        + 16.0 * f[i + 3 * dir] - 3.0 * f[i + 4 * dir]) / (12.0 * h_);
        };
        d[0] = edge(0, +1);
        d[1] = edge(1, +1);
        d[n - 2] = edge(n - 2, -1);
        d[n - 1] = edge(n - 1, -1);
        return d;
    }

    std::vector<double> fd_second_derivative(std::span<const double> f) const {
        const int n = size();
        const double h2 = h_ * h_;
        std::vector<double> d(n);
        for (int i = 2; i < n - 2; ++i)
            d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2])
                   / (12.0 * h2);
        auto edge = [&](int i, int dir) {
            // 6-point one-sided stencil, order 4
            return (45.0 * f[i] - 154.0 * f[i + dir] + 214.0 * f[i + 2 * dir]
                    - 156.0 * f[i + 3 * dir] + 61.0 * f[i + 4 * dir] - 10.0 * f[i + 5 * dir])
                   / (12.0 * h2);
        };
        d[0] = edge(0, +1);
        d[1] = edge(1, +1);
        d[n - 2] = edge(n - 2, -1);
        d[n - 1] = edge(n - 1, -1);
        return d;
    }

    /// Cubic (4-point Lagrange) interpolation of lattice samples at x.
    double interpolate(std::span<const double> f, double x) const {
        if (x <= 0.0) return f[0];
        if (x >= x_max_) return f[n_intervals_];
        int i = static_cast<int>(x / h_);
        if (i > n_intervals_ - 2) i = n_intervals_ - 2;
        if (i < 1) i = 1;
        const double u = x / h_ - i; // in [0,1) around node i
        const double fm = f[i - 1], f0 = f[i], f1 = f[i + 1], f2 = f[i + 2];
        return fm * (-u * (u - 1.0) * (u - 2.0) / 6.0)
             + f0 * ((u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0)
             + f1 * (-(u + 1.0) * u * (u - 2.0) / 2.0)
             + f2 * ((u + 1.0) * u * (u - 1.0) / 6.0);
    }

private:
    double x_max_;
    double h_;
    int n_intervals_ = 0;
    std::vector<double> weights_;
};

using LatticePtr = std::shared_ptr<const Lattice>;

} // namespace genhedge
