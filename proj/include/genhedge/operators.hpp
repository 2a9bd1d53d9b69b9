#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "genhedge/curve.hpp"
#include "genhedge/errors.hpp"
#include "genhedge/model.hpp"

namespace genhedge {

/// The diagonal operator family of the constant-volatility market:
/// B_t y = e^{-at} sum k_i h_i y_i, (B*_t f)_i = e^{-at} k_i (h_i, f)_H,
/// (A_t y)_i = e^{-2at} k_i^2 y_i, S_t y = sum sgn(k_i) h_i y_i.
/// All maps act index-wise on the truncated factor space.
class DiagonalOperatorFamily {
public:
    explicit DiagonalOperatorFamily(const ModelSpec& m) : m_(&m) {}

    int factors() const { return m_->n_factors; }

    std::vector<double> apply_A(double t, std::span<const double> y) const {
        check(y);
        std::vector<double> out(y.size());
        const double w = std::exp(-2.0 * m_->a * t);
        for (size_t i = 0; i < y.size(); ++i) out[i] = w * m_->k[i] * m_->k[i] * y[i];
        return out;
    }

    std::vector<double> apply_A_sqrt(double t, std::span<const double> y) const {
        check(y);
        std::vector<double> out(y.size());
        const double w = std::exp(-m_->a * t);
        for (size_t i = 0; i < y.size(); ++i) out[i] = w * std::abs(m_->k[i]) * y[i];
        return out;
    }

    std::vector<double> apply_A_invsqrt(double t, std::span<const double> y) const {
        check(y);
        std::vector<double> out(y.size());
        const double w = std::exp(m_->a * t);
        for (size_t i = 0; i < y.size(); ++i) {
            if (y[i] == 0.0) { out[i] = 0.0; continue; }
            if (m_->k[i] == 0.0)
                throw singular_operator_error("A^{-1/2}: vanishing k at active index "
                                              + std::to_string(i + 1));
            out[i] = w * y[i] / std::abs(m_->k[i]);
        }
        return out;
    }

    CurveFunction apply_B(double t, std::span<const double> y) const {
        check(y);
        std::vector<double> c(y.size());
        const double w = std::exp(-m_->a * t);
        for (size_t i = 0; i < y.size(); ++i) c[i] = w * m_->k[i] * y[i];
        return CurveFunction::linear_combination(c, m_->basis->bumps());
    }

    std::vector<double> apply_B_star(double t, const CurveFunction& f) const {
        std::vector<double> out(static_cast<size_t>(m_->n_factors));
        const double w = std::exp(-m_->a * t);
        for (int i = 1; i <= m_->n_factors; ++i)
            out[static_cast<size_t>(i - 1)] =
                w * m_->k[static_cast<size_t>(i - 1)] * inner_h(m_->basis->bump(i), f, 1);
        return out;
    }

    CurveFunction apply_S(std::span<const double> y) const {
        check(y);
        std::vector<double> c(y.size());
        for (size_t i = 0; i < y.size(); ++i)
            c[i] = (m_->k[i] < 0.0 ? -1.0 : 1.0) * y[i];
        return CurveFunction::linear_combination(c, m_->basis->bumps());
    }

    /// S_t (A_t)^{-1/2} y = e^{at} sum (y_i / k_i) h_i.
    CurveFunction apply_S_A_invsqrt(double t, std::span<const double> y) const {
        check(y);
        std::vector<double> c(y.size());
        const double w = std::exp(m_->a * t);
        for (size_t i = 0; i < y.size(); ++i) {
            if (y[i] == 0.0) { c[i] = 0.0; continue; }
            if (m_->k[i] == 0.0)
                throw singular_operator_error("S A^{-1/2}: vanishing k at active index "
                                              + std::to_string(i + 1));
            c[i] = w * y[i] / m_->k[i];
        }
        return CurveFunction::linear_combination(c, m_->basis->bumps());
    }

    /// ell_t = L_t p0 = e^{-at} p0.
    CurveFunction ell(double t) const { return m_->p0.scaled(std::exp(-m_->a * t)); }

private:
    void check(std::span<const double> y) const {
        if (static_cast<int>(y.size()) != m_->n_factors)
            throw config_error("operator family: vector length mismatch");
    }
    const ModelSpec* m_;
};

} // namespace genhedge
