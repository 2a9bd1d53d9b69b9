#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "genhedge/errors.hpp"

namespace genhedge {

/// Gauss-Hermite rule: int f(u) exp(-u^2) du ~= sum w_i f(u_i).
/// Nodes by Newton iteration on the recurrence (standard gauher scheme).
class GaussHermite {
public:
    explicit GaussHermite(int n) : nodes_(n), weights_(n) {
        if (n < 2) throw config_error("GaussHermite: need at least 2 nodes");
        const double tol = 1e-14;
        const int m = (n + 1) / 2;
        double z = 0.0;
        for (int i = 0; i < m; ++i) {
            if (i == 0) z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
            else if (i == 1) z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
            else if (i == 2) z = 1.86 * z - 0.86 * nodes_[0];
            else if (i == 3) z = 1.91 * z - 0.91 * nodes_[1];
            else z = 2.0 * z - nodes_[i - 2];
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p1 = pi_m4, p2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p3 = p2;
                    p2 = p1;
                    p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2
                         - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
                }
                pp = std::sqrt(2.0 * n) * p2;
                const double dz = p1 / pp;
                z -= dz;
                if (std::abs(dz) <= tol) break;
            }
            nodes_[i] = z;
            nodes_[n - 1 - i] = -z;
            weights_[i] = 2.0 / (pp * pp);
            weights_[n - 1 - i] = weights_[i];
        }
        // store in increasing order
        for (int i = 0; i < n / 2; ++i) {
            std::swap(nodes_[i], nodes_[n - 1 - i]);
            std::swap(weights_[i], weights_[n - 1 - i]);
        }
    }

    int size() const { return static_cast<int>(nodes_.size()); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    /// E[f(Z)] for Z ~ N(mean, stdev^2).
    double gaussian_mean(const std::function<double(double)>& f, double mean,
                         double stdev) const {
        const double scale = std::sqrt(2.0) * stdev;
        double s = 0.0;
        for (size_t i = 0; i < nodes_.size(); ++i) {
            const double v = f(mean + scale * nodes_[i]);
            if (!std::isfinite(v))
                throw numeric_error("GaussHermite: integrand overflow in the tail; "
                                    "widen the tail handling or rescale the claim");
            s += weights_[i] * v;
        }
        return s / std::sqrt(M_PI);
    }

private:
    static constexpr double pi_m4 = 0.7511255444649425; // pi^{-1/4}
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

} // namespace genhedge
