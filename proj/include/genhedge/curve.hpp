#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "genhedge/errors.hpp"
#include "genhedge/lattice.hpp"

namespace genhedge {

using RealFn = std::function<double(double)>;

/// A real function on [0, x_max] with up to two derivatives, an effective
/// support, and cached lattice samples. Analytic evaluators are used where
/// declared; sampled curves fall back to 4th-order finite differences and
/// cubic interpolation off the lattice.
class CurveFunction {
public:
    static CurveFunction analytic(LatticePtr lat, RealFn f, RealFn d1, RealFn d2,
                                  double lo, double hi) {
        CurveFunction c(std::move(lat), lo, hi, 2);
        c.f_ = std::move(f);
        c.f1_ = std::move(d1);
        c.f2_ = std::move(d2);
        c.sample_all();
        return c;
    }

    static CurveFunction analytic1(LatticePtr lat, RealFn f, RealFn d1, double lo, double hi) {
        CurveFunction c(std::move(lat), lo, hi, 1);
        c.f_ = std::move(f);
        c.f1_ = std::move(d1);
        c.sample_all();
        return c;
    }

    static CurveFunction values_only(LatticePtr lat, RealFn f, double lo, double hi) {
        CurveFunction c(std::move(lat), lo, hi, 0);
        c.f_ = std::move(f);
        c.sample_all();
        return c;
    }

    /// Lattice samples with finite-difference derivatives of declared order 4.
    static CurveFunction from_samples(LatticePtr lat, std::vector<double> values,
                                      double lo, double hi, int deriv_count = 2) {
        CurveFunction c(lat, lo, hi, deriv_count);
        c.val_ = std::move(values);
        if (static_cast<int>(c.val_.size()) != lat->size())
            throw config_error("CurveFunction: sample count does not match lattice");
        if (deriv_count >= 1) c.d1_ = lat->fd_derivative(c.val_);
        if (deriv_count >= 2) c.d2_ = lat->fd_second_derivative(c.val_);
        return c;
    }

    static CurveFunction zero(LatticePtr lat) {
        CurveFunction c(lat, 1.0, 0.0, 2);
        c.val_.assign(static_cast<size_t>(lat->size()), 0.0);
        c.d1_ = c.val_;
        c.d2_ = c.val_;
        c.f_ = [](double) { return 0.0; };
        c.f1_ = c.f_;
        c.f2_ = c.f_;
        return c;
    }

    const LatticePtr& lattice() const { return lat_; }
    double domain_end() const { return lat_->x_max(); }
    int derivative_count() const { return deriv_count_; }
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }
    bool support_empty() const { return lo_ > hi_; }

    /// Node index range [first, last] covering the effective support.
    std::pair<int, int> window() const {
        if (support_empty()) return {1, 0};
        const int i0 = std::max(0, static_cast<int>(std::floor(lo_ / lat_->spacing())) - 1);
        const int i1 = std::min(lat_->size() - 1,
                                static_cast<int>(std::ceil(hi_ / lat_->spacing())) + 1);
        return {i0, i1};
    }

    double operator()(double x) const {
        if (f_) return f_(x);
        return lat_->interpolate(val_, x);
    }
    double deriv1(double x) const {
        require(1);
        if (f1_) return f1_(x);
        return lat_->interpolate(d1_, x);
    }
    double deriv2(double x) const {
        require(2);
        if (f2_) return f2_(x);
        return lat_->interpolate(d2_, x);
    }

    std::span<const double> values() const { return val_; }
    std::span<const double> deriv1s() const { require(1); return d1_; }
    std::span<const double> deriv2s() const { require(2); return d2_; }

    CurveFunction scaled(double c) const {
        CurveFunction out(lat_, lo_, hi_, deriv_count_);
        out.val_.resize(val_.size());
        for (size_t i = 0; i < val_.size(); ++i) out.val_[i] = c * val_[i];
        if (deriv_count_ >= 1) {
            out.d1_.resize(d1_.size());
            for (size_t i = 0; i < d1_.size(); ++i) out.d1_[i] = c * d1_[i];
        }
        if (deriv_count_ >= 2) {
            out.d2_.resize(d2_.size());
            for (size_t i = 0; i < d2_.size(); ++i) out.d2_[i] = c * d2_[i];
        }
        if (f_) { auto f = f_; out.f_ = [f, c](double x) { return c * f(x); }; }
        if (f1_) { auto f = f1_; out.f1_ = [f, c](double x) { return c * f(x); }; }
        if (f2_) { auto f = f2_; out.f2_ = [f, c](double x) { return c * f(x); }; }
        return out;
    }

    /// Pointwise linear combination sum_j c_j f_j; derivative count is the
    /// minimum across terms, effective support the union.
    static CurveFunction linear_combination(std::span<const double> coeff,
                                            std::span<const CurveFunction> fns) {
        if (coeff.size() != fns.size() || fns.empty())
            throw config_error("linear_combination: size mismatch");
        const LatticePtr lat = fns[0].lat_;
        int dc = 2;
        double lo = 1.0, hi = 0.0;
        for (const auto& f : fns) {
            dc = std::min(dc, f.deriv_count_);
            if (!f.support_empty()) {
                if (lo > hi) { lo = f.lo_; hi = f.hi_; }
                else { lo = std::min(lo, f.lo_); hi = std::max(hi, f.hi_); }
            }
        }
        CurveFunction out(lat, lo, hi, dc);
        const size_t n = static_cast<size_t>(lat->size());
        out.val_.assign(n, 0.0);
        if (dc >= 1) out.d1_.assign(n, 0.0);
        if (dc >= 2) out.d2_.assign(n, 0.0);
        for (size_t j = 0; j < fns.size(); ++j) {
            const double c = coeff[j];
            if (c == 0.0) continue;
            for (size_t i = 0; i < n; ++i) out.val_[i] += c * fns[j].val_[i];
            if (dc >= 1)
                for (size_t i = 0; i < n; ++i) out.d1_[i] += c * fns[j].d1_[i];
            if (dc >= 2)
                for (size_t i = 0; i < n; ++i) out.d2_[i] += c * fns[j].d2_[i];
        }
        return out;
    }

private:
    CurveFunction(LatticePtr lat, double lo, double hi, int dc)
        : lat_(std::move(lat)), lo_(lo), hi_(hi), deriv_count_(dc) {}

    void require(int order) const {
        if (deriv_count_ < order)
            throw capability_error("CurveFunction: derivative order "
                                   + std::to_string(order) + " not declared");
    }

    void sample_all() {
        val_.resize(static_cast<size_t>(lat_->size()));
        for (int i = 0; i < lat_->size(); ++i) val_[static_cast<size_t>(i)] = f_(lat_->node(i));
        if (deriv_count_ >= 1) {
            d1_.resize(val_.size());
            if (f1_) for (int i = 0; i < lat_->size(); ++i) d1_[static_cast<size_t>(i)] = f1_(lat_->node(i));
            else d1_ = lat_->fd_derivative(val_);
        }
        if (deriv_count_ >= 2) {
            d2_.resize(val_.size());
            if (f2_) for (int i = 0; i < lat_->size(); ++i) d2_[static_cast<size_t>(i)] = f2_(lat_->node(i));
            else d2_ = lat_->fd_second_derivative(val_);
        }
    }

    LatticePtr lat_;
    double lo_, hi_;
    int deriv_count_;
    std::vector<double> val_, d1_, d2_;
    RealFn f_, f1_, f2_;
};

/// Continuous functional of the form a*delta_0 + density.
struct DualElement {
    double delta0_coefficient = 0.0;
    CurveFunction regular_part;
};

/// H^n inner product (f, g) = sum_{i<=order} int d^i f d^i g on [0, x_max].
inline double inner_h(const CurveFunction& f, const CurveFunction& g, int order) {
    if (order < 0 || order > 2)
        throw capability_error("inner_h: order must be 0, 1 or 2");
    if (f.lattice().get() != g.lattice().get())
        throw config_error("inner_h: functions live on different lattices");
    if (f.support_empty() || g.support_empty()) return 0.0;
    const auto [f0, f1] = f.window();
    const auto [g0, g1] = g.window();
    const int i0 = std::max(f0, g0);
    const int i1 = std::min(f1, g1);
    if (i0 > i1) return 0.0;
    const Lattice& lat = *f.lattice();
    double s = lat.integrate_product(f.values(), g.values(), i0, i1);
    if (order >= 1) s += lat.integrate_product(f.deriv1s(), g.deriv1s(), i0, i1);
    if (order >= 2) s += lat.integrate_product(f.deriv2s(), g.deriv2s(), i0, i1);
    return s;
}

inline double norm_h(const CurveFunction& f, int order) {
    return std::sqrt(std::max(0.0, inner_h(f, f, order)));
}

/// Dual pairing <u, f> = a f(0) + int rho f.
inline double pair_dual(const DualElement& u, const CurveFunction& f) {
    double s = u.delta0_coefficient * f(0.0);
    if (!u.regular_part.support_empty()) {
        const auto [r0, r1] = u.regular_part.window();
        const auto [g0, g1] = f.window();
        const int i0 = std::max(r0, g0);
        const int i1 = std::min(r1, g1);
        if (i0 <= i1)
            s += f.lattice()->integrate_product(u.regular_part.values(), f.values(), i0, i1);
    }
    return s;
}

/// Pairing against a raw sample row on the same lattice (row[0] is f(0)).
inline double pair_dual(const DualElement& u, std::span<const double> row) {
    double s = u.delta0_coefficient * row[0];
    if (!u.regular_part.support_empty()) {
        const auto [r0, r1] = u.regular_part.window();
        s += u.regular_part.lattice()->integrate_product(u.regular_part.values(), row, r0, r1);
    }
    return s;
}

/// Left translation (T_a f)(x) = f(x + a), clipped to the domain.
inline CurveFunction translate(const CurveFunction& f, double a) {
    if (a < 0.0) throw std::domain_error("translate: shift must be nonnegative");
    if (a == 0.0) return f;
    const LatticePtr lat = f.lattice();
    const double end = lat->x_max();
    const double lo = std::max(0.0, f.support_lo() - a);
    const double hi = f.support_hi() - a;
    if (hi < 0.0) return CurveFunction::zero(lat);
    auto clip = [end](double x) { return std::min(x, end); };
    auto fcopy = std::make_shared<CurveFunction>(f);
    RealFn v = [fcopy, a, clip](double x) { return (*fcopy)(clip(x + a)); };
    if (f.derivative_count() >= 2) {
        RealFn d1 = [fcopy, a, clip](double x) { return fcopy->deriv1(clip(x + a)); };
        RealFn d2 = [fcopy, a, clip](double x) { return fcopy->deriv2(clip(x + a)); };
        return CurveFunction::analytic(lat, v, d1, d2, lo, std::min(hi, end));
    }
    if (f.derivative_count() >= 1) {
        RealFn d1 = [fcopy, a, clip](double x) { return fcopy->deriv1(clip(x + a)); };
        return CurveFunction::analytic1(lat, v, d1, lo, std::min(hi, end));
    }
    return CurveFunction::values_only(lat, v, lo, std::min(hi, end));
}

/// Canonical isomorphism H -> H' on C^2 curves:
/// S f = (f - f'') - f'(0) delta_0, so that <S f, g> = (f, g)_{H^1}.
inline DualElement canonical_iso(const CurveFunction& f) {
    if (f.derivative_count() < 2)
        throw capability_error("canonical_iso: second derivative required");
    const LatticePtr lat = f.lattice();
    std::vector<double> reg(static_cast<size_t>(lat->size()));
    const auto v = f.values();
    const auto d2 = f.deriv2s();
    for (size_t i = 0; i < reg.size(); ++i) reg[i] = v[i] - d2[i];
    double lo = f.support_lo(), hi = f.support_hi();
    CurveFunction density = CurveFunction::from_samples(lat, std::move(reg), lo, hi, 2);
    return DualElement{-f.deriv1(0.0), std::move(density)};
}

/// H'-norm of delta_0-plus-density elements via the Riesz representer of
/// -r'' + r = rho, r'(0) = -a, r'(X) = 0, written in the cosh Green kernel.
/// The cosh tables cost one pass per lattice; reuse the solver across calls.
class DualNormSolver {
public:
    explicit DualNormSolver(LatticePtr lat) : lat_(std::move(lat)) {
        const int n = lat_->size();
        const double X = lat_->x_max();
        cpos_.resize(static_cast<size_t>(n));
        cneg_.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            cpos_[static_cast<size_t>(i)] = std::cosh(lat_->node(i));
            cneg_[static_cast<size_t>(i)] = std::cosh(X - lat_->node(i));
        }
        sinh_x_ = std::sinh(X);
        scratch_a_.resize(static_cast<size_t>(n));
        scratch_b_.resize(static_cast<size_t>(n));
    }

    /// ||a delta_0 + rho||_{H'} for a density given as lattice samples.
    double norm(double delta0, std::span<const double> density) const {
        const int n = lat_->size();
        auto& rho_cpos = scratch_a_;
        auto& rho_cneg = scratch_b_;
        for (int i = 0; i < n; ++i) {
            const size_t k = static_cast<size_t>(i);
            rho_cpos[k] = density[k] * cpos_[k];
            rho_cneg[k] = density[k] * cneg_[k];
        }
        const auto pre_pos = lat_->prefix_integral(rho_cpos);
        const auto pre_neg = lat_->prefix_integral(rho_cneg);
        const double total_neg = pre_neg.back();
        double val = delta0 * (cneg_[0] * delta0 + cneg_[0] * pre_pos[0]
                               + cpos_[0] * (total_neg - pre_neg[0])) / sinh_x_;
        std::vector<double> rho_r(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const size_t k = static_cast<size_t>(i);
            const double r = (cneg_[k] * (delta0 + pre_pos[k])
                              + cpos_[k] * (total_neg - pre_neg[k])) / sinh_x_;
            rho_r[k] = density[k] * r;
        }
        val += lat_->integrate(rho_r);
        return std::sqrt(std::max(0.0, val));
    }

    double norm(const DualElement& u) const {
        if (u.regular_part.support_empty()) {
            return std::abs(u.delta0_coefficient) * std::sqrt(cneg_[0] / sinh_x_);
        }
        return norm(u.delta0_coefficient, u.regular_part.values());
    }

private:
    LatticePtr lat_;
    std::vector<double> cpos_, cneg_;
    double sinh_x_ = 1.0;
    mutable std::vector<double> scratch_a_, scratch_b_;
};

inline double dual_norm_h1(const DualElement& u) {
    DualNormSolver solver(u.regular_part.lattice());
    return solver.norm(u);
}

} // namespace genhedge
