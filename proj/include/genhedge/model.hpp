#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "genhedge/bumps.hpp"
#include "genhedge/curve.hpp"
#include "genhedge/errors.hpp"
#include "genhedge/lattice.hpp"
#include "genhedge/rng.hpp"

namespace genhedge {

/// lambda_i(a) = (h_i, e^{-a .})_{H^1}. Single code path used by the k
/// schedule, hedging identities and the prescribed-limit solver.
inline double lambda_coefficient(const BumpBasis& basis, int i, double a) {
    const CurveFunction expc = exponential_curve(basis.lattice(), a);
    return inner_h(basis.bump(i), expc, 1);
}

/// Search for a decay rate a with |lambda_i(a)| >= floor * e^{-a(i-1)} for
/// all i <= N. Starts at 1/2 and steps away from the known zero at a = 1.
inline double select_a(const BumpBasis& basis, int n, double floor) {
    if (floor <= 0.0) throw std::domain_error("select_a: floor must be positive");
    auto admissible = [&](double a) {
        if (std::abs(a - 1.0) < 1e-6) return false; // lambda_i(1) = 0 identically
        for (int i = 1; i <= n; ++i) {
            const double scale = std::exp(-a * (i - 1));
            if (std::abs(lambda_coefficient(basis, i, a)) < floor * scale) return false;
        }
        return true;
    };
    if (admissible(0.5)) return 0.5;
    for (double step = 0.05; step <= 0.45 + 1e-12; step += 0.05) {
        if (admissible(0.5 - step)) return 0.5 - step;
        if (admissible(0.5 + step)) return 0.5 + step;
    }
    for (double a = 1.05; a <= 3.0 + 1e-12; a += 0.05)
        if (admissible(a)) return a;
    throw config_error("select_a: no admissible decay rate found for floor "
                       + std::to_string(floor));
}

/// k_i with sgn(k_i) = sgn(lambda_i(a)) and
/// |k_i| = min(|lambda_i|, (1 + ||h_i/p0||_{H^2}^2)^{-1/2}, extra_caps[i]) / i^2.
inline std::vector<double> select_k(const BumpBasis& basis, double a,
                                    const std::vector<double>& extra_caps) {
    const int n = basis.count();
    const LatticePtr& lat = basis.lattice();
    std::vector<double> k(static_cast<size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const double lam = lambda_coefficient(basis, i, a);
        if (lam == 0.0)
            throw config_error("select_k: lambda_" + std::to_string(i) + "(a) vanishes");
        // h_i / p0 = h_i e^{a x}
        RealFn f = [&basis, i, a](double x) { return basis.value(i, x) * std::exp(a * x); };
        RealFn f1 = [&basis, i, a](double x) {
            return (basis.deriv1(i, x) + a * basis.value(i, x)) * std::exp(a * x);
        };
        RealFn f2 = [&basis, i, a](double x) {
            return (basis.deriv2(i, x) + 2.0 * a * basis.deriv1(i, x)
                    + a * a * basis.value(i, x)) * std::exp(a * x);
        };
        const CurveFunction ratio = CurveFunction::analytic(lat, f, f1, f2, i - 0.25, i + 0.25);
        const double h2sq = inner_h(ratio, ratio, 2);
        double cap = std::min(std::abs(lam), 1.0 / std::sqrt(1.0 + h2sq));
        if (!extra_caps.empty()) {
            if (static_cast<int>(extra_caps.size()) < n)
                throw config_error("select_k: extra_caps must cover all indices");
            if (extra_caps[static_cast<size_t>(i - 1)] <= 0.0)
                throw std::domain_error("select_k: caps must be positive");
            cap = std::min(cap, extra_caps[static_cast<size_t>(i - 1)]);
        }
        k[static_cast<size_t>(i - 1)] = std::copysign(cap / (i * i), lam);
    }
    return k;
}

/// mhat_i = 1/i for odd i, 0 for even i.
inline std::vector<double> market_price_of_risk(int n) {
    if (n < 1) throw std::domain_error("market_price_of_risk: N must be >= 1");
    std::vector<double> m(static_cast<size_t>(n), 0.0);
    for (int i = 1; i <= n; i += 2) m[static_cast<size_t>(i - 1)] = 1.0 / i;
    return m;
}

/// sigma_i = k_i h_i e^{a x} (so p0 sigma_i = k_i h_i), with analytic
/// derivatives for H^2 work.
inline std::vector<CurveFunction> build_sigma(const BumpBasis& basis,
                                              const std::vector<double>& k, double a) {
    const int n = basis.count();
    if (static_cast<int>(k.size()) != n)
        throw config_error("build_sigma: k size mismatch");
    std::vector<CurveFunction> sigma;
    sigma.reserve(static_cast<size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const double ki = k[static_cast<size_t>(i - 1)];
        RealFn f = [&basis, i, a, ki](double x) { return ki * basis.value(i, x) * std::exp(a * x); };
        RealFn f1 = [&basis, i, a, ki](double x) {
            return ki * (basis.deriv1(i, x) + a * basis.value(i, x)) * std::exp(a * x);
        };
        RealFn f2 = [&basis, i, a, ki](double x) {
            return ki * (basis.deriv2(i, x) + 2.0 * a * basis.deriv1(i, x)
                         + a * a * basis.value(i, x)) * std::exp(a * x);
        };
        sigma.push_back(CurveFunction::analytic(basis.lattice(), f, f1, f2, i - 0.25, i + 0.25));
    }
    return sigma;
}

/// Frozen market description. Built once by make_model; immutable afterwards
/// and safe to share across threads.
struct ModelSpec {
    double a = 0.5;
    int n_factors = 12;
    double time_horizon = 1.0;
    int time_steps = 512;
    uint64_t seed = 42;
    int lattice_points_per_unit = 4096;
    double cap_decay = 0.0;          // per-index extra cap factor 10^{-cap_decay (i-1)}
    std::vector<double> extra_caps;  // resolved per-index caps fed to select_k (may be empty)
    double declared_sum_bound = 2.0; // finite-N surrogate bound for the volatility sum

    LatticePtr lattice;
    std::shared_ptr<const BumpBasis> basis;
    std::vector<double> k;
    std::vector<double> lambda;      // lambda_i(a), inner-product route
    std::vector<double> lambda_hat;  // int (h_i - h_i'') p0, density route
    std::vector<double> hn2_sq;      // ||h_i / p0||_{H^2}^2
    std::vector<double> mhat;
    std::vector<double> e;           // e = c mhat
    double c = 0.0;                  // 1 / ||mhat||_{l2} at truncation N
    std::vector<double> q;           // l^{s,2} weights
    double s_weight = 1.0;
    double k_cond = 1.0;             // uniform-condition constant e^{aT}
    std::vector<CurveFunction> sigma;
    CurveFunction p0 = CurveFunction::zero(std::make_shared<Lattice>(1.0, 4));
    double volatility_sum = 0.0;     // sum i^2 k_i^2 (1 + ||h_i/p0||_{H^2}^2)

    double dt() const { return time_horizon / time_steps; }
    double x_max() const { return lattice->x_max(); }
};

struct ModelParams {
    double a = 0.5;                     // <= 0 means: run select_a
    int n_factors = 12;
    double time_horizon = 1.0;
    int time_steps = 512;
    uint64_t seed = 42;
    int lattice_points_per_unit = 4096;
    double cap_decay = 0.0;
    std::vector<double> extra_caps;     // optional explicit per-index caps
    double declared_sum_bound = 2.0;
    double a_floor = 1e-6;
};

inline ModelSpec make_model(const ModelParams& p) {
    if (p.n_factors < 1) throw config_error("make_model: n_factors must be >= 1");
    if (p.time_horizon <= 0.0 || p.time_steps < 1)
        throw config_error("make_model: invalid time grid");
    ModelSpec m;
    m.n_factors = p.n_factors;
    m.time_horizon = p.time_horizon;
    m.time_steps = p.time_steps;
    m.seed = p.seed;
    m.lattice_points_per_unit = p.lattice_points_per_unit;
    m.cap_decay = p.cap_decay;
    m.declared_sum_bound = p.declared_sum_bound;
    const double x_max = p.n_factors + 2.0;
    m.lattice = std::make_shared<Lattice>(x_max, p.lattice_points_per_unit);
    m.basis = build_bumps(m.lattice, p.n_factors);

    if (p.a > 0.0) {
        if (std::abs(p.a - 1.0) < 1e-9)
            throw config_error("make_model: a = 1 is a common zero of all lambda_i");
        const double floor_scale = std::abs(lambda_coefficient(*m.basis, 1, p.a));
        if (floor_scale < p.a_floor)
            throw config_error("make_model: |lambda_1(a)| below floor at requested a");
        m.a = p.a;
    } else {
        m.a = select_a(*m.basis, p.n_factors, p.a_floor);
    }

    std::vector<double> caps = p.extra_caps;
    if (caps.empty() && p.cap_decay > 0.0) {
        caps.resize(static_cast<size_t>(p.n_factors));
        for (int i = 1; i <= p.n_factors; ++i)
            caps[static_cast<size_t>(i - 1)] =
                std::abs(lambda_coefficient(*m.basis, i, m.a))
                * std::pow(10.0, -p.cap_decay * (i - 1));
    }
    m.extra_caps = caps;
    m.k = select_k(*m.basis, m.a, caps);
    m.p0 = exponential_curve(m.lattice, m.a);

    m.lambda.resize(static_cast<size_t>(p.n_factors));
    m.lambda_hat.resize(static_cast<size_t>(p.n_factors));
    m.hn2_sq.resize(static_cast<size_t>(p.n_factors));
    for (int i = 1; i <= p.n_factors; ++i) {
        m.lambda[static_cast<size_t>(i - 1)] = lambda_coefficient(*m.basis, i, m.a);
        const DualElement sh = canonical_iso(m.basis->bump(i));
        m.lambda_hat[static_cast<size_t>(i - 1)] = pair_dual(sh, m.p0);
        RealFn f = [&m, i](double x) { return m.basis->value(i, x) * std::exp(m.a * x); };
        RealFn f1 = [&m, i](double x) {
            return (m.basis->deriv1(i, x) + m.a * m.basis->value(i, x)) * std::exp(m.a * x);
        };
        RealFn f2 = [&m, i](double x) {
            return (m.basis->deriv2(i, x) + 2.0 * m.a * m.basis->deriv1(i, x)
                    + m.a * m.a * m.basis->value(i, x)) * std::exp(m.a * x);
        };
        const CurveFunction ratio = CurveFunction::analytic(m.lattice, f, f1, f2,
                                                            i - 0.25, i + 0.25);
        m.hn2_sq[static_cast<size_t>(i - 1)] = inner_h(ratio, ratio, 2);
    }

    m.volatility_sum = 0.0;
    for (int i = 1; i <= p.n_factors; ++i) {
        const double ki = m.k[static_cast<size_t>(i - 1)];
        m.volatility_sum += i * i * ki * ki * (1.0 + m.hn2_sq[static_cast<size_t>(i - 1)]);
    }
    if (m.volatility_sum > m.declared_sum_bound)
        throw invariant_error("make_model: volatility sum "
                              + std::to_string(m.volatility_sum)
                              + " exceeds declared bound");

    m.mhat = market_price_of_risk(p.n_factors);
    double mm = 0.0;
    for (double v : m.mhat) mm += v * v;
    m.c = 1.0 / std::sqrt(mm);
    m.e.resize(m.mhat.size());
    for (size_t i = 0; i < m.mhat.size(); ++i) m.e[i] = m.c * m.mhat[i];

    // Running-max weight schedule: q_i = max(1, q_{i-1}, 1/|k_i|), s = 1,
    // which turns the uniform condition into an identity with k = e^{aT}.
    m.q.resize(m.k.size());
    double run = 1.0;
    for (size_t i = 0; i < m.k.size(); ++i) {
        run = std::max(run, 1.0 / std::abs(m.k[i]));
        m.q[i] = run;
    }
    m.s_weight = 1.0;
    m.k_cond = std::exp(m.a * m.time_horizon);

    m.sigma = build_sigma(*m.basis, m.k, m.a);
    return m;
}

/// Drift curve m = sum_i sigma_i mhat_i.
inline CurveFunction drift_curve(const ModelSpec& m) {
    return CurveFunction::linear_combination(m.mhat, m.sigma);
}

struct UniformConditionReport {
    bool passed = true;
    double min_slack = 0.0;   // min over samples of k_cond ||A^{1/2}x||_{l^{s,2}} / ||x||
    double witness_t = 0.0;
    std::vector<double> witness_x;
};

/// Checks ||x|| <= k_cond ||A_t^{1/2} x||_{l^{s,2}} on random vectors across
/// the whole time grid, using (A_t^{1/2}x)_i = e^{-at} |k_i| x_i.
inline UniformConditionReport check_uniform_condition(const ModelSpec& m,
                                                      int n_vectors = 100) {
    return [&]() {
        UniformConditionReport rep;
        rep.min_slack = std::numeric_limits<double>::infinity();
        NormalField rng(m.seed);
        const int n = m.n_factors;
        std::vector<double> x(static_cast<size_t>(n));
        for (int v = 0; v < n_vectors; ++v) {
            for (int i = 0; i < n; ++i)
                x[static_cast<size_t>(i)] = rng.normal(rng_stream::probe,
                                                       static_cast<uint32_t>(v), 0,
                                                       static_cast<uint32_t>(i));
            double nx2 = 0.0;
            for (double xi : x) nx2 += xi * xi;
            const double nx = std::sqrt(nx2);
            for (int j = 0; j <= m.time_steps; ++j) {
                const double t = j * m.dt();
                double w2 = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double axi = std::exp(-m.a * t) * std::abs(m.k[static_cast<size_t>(i)])
                                       * x[static_cast<size_t>(i)];
                    const double qi = std::pow(m.q[static_cast<size_t>(i)], m.s_weight);
                    w2 += qi * qi * axi * axi;
                }
                const double slack = m.k_cond * std::sqrt(w2) / nx;
                if (slack < rep.min_slack) {
                    rep.min_slack = slack;
                    rep.witness_t = t;
                    rep.witness_x = x;
                }
            }
        }
        rep.passed = rep.min_slack >= 1.0 - 1e-12;
        return rep;
    }();
}

/// As above but with caller-supplied weights (sabotage/negative controls).
inline UniformConditionReport check_uniform_condition_with(const ModelSpec& m,
                                                           const std::vector<double>& q,
                                                           double s_weight, double k_cond,
                                                           int n_vectors = 100) {
    ModelSpec probe = m;
    probe.q = q;
    probe.s_weight = s_weight;
    probe.k_cond = k_cond;
    return check_uniform_condition(probe, n_vectors);
}

} // namespace genhedge
