#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "genhedge/curve.hpp"
#include "genhedge/errors.hpp"
#include "genhedge/model.hpp"
#include "genhedge/operators.hpp"
#include "genhedge/simulate.hpp"

namespace genhedge {

/// A claim defined by its own discrete stochastic sum
///   X = mean + sum_j (x_{t_j}, dW^Q_j),
/// which makes replication exact by construction. The integrand callback is
/// bound to a path and must be predictable (a function of the state up to
/// and including step j's left endpoint).
struct ClaimRepresentation {
    double mean = 0.0;
    std::function<std::vector<double>(int step)> integrand;
    int max_active_index = 0; // highest factor index the integrand touches
};

inline double claim_value(const ModelSpec& m, const ClaimRepresentation& c,
                          const PathBundle& path) {
    double v = c.mean;
    for (int j = 0; j < path.n_steps; ++j) {
        const auto x = c.integrand(j);
        for (int i = 0; i < path.n_factors; ++i)
            v += x[static_cast<size_t>(i)] * path.dwq(j, i, m);
    }
    return v;
}

/// E_Q[X | F_{t_j}] for a discretely-defined claim: the partial sum.
inline double claim_conditional_value(const ModelSpec& m, const ClaimRepresentation& c,
                                      const PathBundle& path, int step) {
    double v = c.mean;
    for (int j = 0; j < step; ++j) {
        const auto x = c.integrand(j);
        for (int i = 0; i < path.n_factors; ++i)
            v += x[static_cast<size_t>(i)] * path.dwq(j, i, m);
    }
    return v;
}

/// Hedging portfolio along one path. The risky part at step j has density
/// (p0 / pbar_j)(x) * sum_i gamma_j^i (h_i - h_i'')(x) with gamma^i = x^i/k_i
/// and no delta_0 component; b_j delta_0 carries the risk-free leg.
struct Portfolio {
    double dt = 0.0;
    int n_steps = 0;
    int n_factors = 0;
    std::vector<double> b;                  // risk-free coefficient, steps 0..n
    std::vector<std::vector<double>> gamma; // risky coordinates, steps 0..n
    std::vector<double> value;              // V_j = b_j pbar_j(0) + risky_value_j
    std::vector<double> risky_value;        // quadrature value of the risky leg
};

namespace detail {

/// Node range [first, last] covering every bump support.
inline std::pair<int, int> risky_window(const ModelSpec& m) {
    const double h = m.lattice->spacing();
    const int lo = std::max(0, static_cast<int>(std::floor(0.70 / h)));
    const int hi = std::min(m.lattice->size() - 1,
                            static_cast<int>(std::ceil((m.n_factors + 0.30) / h)));
    return {lo, hi};
}

/// Density samples of the risky leg on [lo, hi]: ratio_j(x) * sum gamma_i Sh_i(x),
/// where ratio_j = p0 / pbar_j and Sh_i = h_i - h_i''.
inline void risky_density_row(const ModelSpec& m, std::span<const double> gamma,
                              const CurveField& field, int lo, int hi,
                              std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const auto p0v = m.p0.values();
    for (int i = 1; i <= m.n_factors; ++i) {
        const double g = gamma[static_cast<size_t>(i - 1)];
        if (g == 0.0) continue;
        const auto& hb = m.basis->bump(i);
        const auto [w0, w1] = hb.window();
        const auto hv = hb.values();
        const auto h2 = hb.deriv2s();
        for (int l = std::max(w0, lo); l <= std::min(w1, hi); ++l)
            out[static_cast<size_t>(l - lo)] += g * (hv[l] - h2[l]);
    }
    for (int l = lo; l <= hi; ++l) {
        const double ratio = p0v[static_cast<size_t>(l)] / field.pbar(l);
        out[static_cast<size_t>(l - lo)] *= ratio;
    }
}

/// Quadrature of density row against pbar (the risky leg's value).
inline double risky_pair_pbar(const ModelSpec& m, std::span<const double> density,
                              const CurveField& field, int lo, int hi) {
    const auto w = m.lattice->weights();
    double s = 0.0;
    for (int l = lo; l <= hi; ++l)
        s += w[static_cast<size_t>(l)] * density[static_cast<size_t>(l - lo)] * field.pbar(l);
    return s;
}

/// Quadrature of density row against pbar * sigma_i.
inline double risky_pair_pbar_sigma(const ModelSpec& m, std::span<const double> density,
                                    const CurveField& field, int lo, int hi, int i) {
    const auto& sig = m.sigma[static_cast<size_t>(i - 1)];
    const auto [w0, w1] = sig.window();
    const auto sv = sig.values();
    const auto w = m.lattice->weights();
    double s = 0.0;
    for (int l = std::max(w0, lo); l <= std::min(w1, hi); ++l)
        s += w[static_cast<size_t>(l)] * density[static_cast<size_t>(l - lo)]
             * field.pbar(l) * sv[l];
    return s;
}

} // namespace detail

/// Solve the hedge equations for a discretely-defined claim along a path:
/// the risky leg comes from S_t (A_t)^{-1/2} x_t through the canonical
/// isomorphism, the risk-free coefficient makes the value match
/// E_Q[X | F_t] exactly.
inline Portfolio solve_hedge(const ModelSpec& m, const ClaimRepresentation& claim,
                             const PathBundle& path) {
    if (claim.max_active_index > m.n_factors)
        throw std::domain_error("solve_hedge: integrand touches factors beyond the model");
    Portfolio pf;
    pf.dt = path.dt;
    pf.n_steps = path.n_steps;
    pf.n_factors = path.n_factors;
    pf.b.resize(static_cast<size_t>(path.n_steps) + 1);
    pf.gamma.assign(static_cast<size_t>(path.n_steps) + 1,
                    std::vector<double>(static_cast<size_t>(path.n_factors), 0.0));
    pf.value.resize(static_cast<size_t>(path.n_steps) + 1);
    pf.risky_value.resize(static_cast<size_t>(path.n_steps) + 1);

    CurveField field(m, path.measure);
    const auto [lo, hi] = detail::risky_window(m);
    std::vector<double> density(static_cast<size_t>(hi - lo + 1));
    double cond = claim.mean;
    for (int j = 0; j <= path.n_steps; ++j) {
        auto& g = pf.gamma[static_cast<size_t>(j)];
        if (j < path.n_steps) {
            const auto x = claim.integrand(j);
            for (int i = 0; i < path.n_factors; ++i) {
                if (x[static_cast<size_t>(i)] == 0.0) continue;
                if (m.k[static_cast<size_t>(i)] == 0.0)
                    throw singular_operator_error("solve_hedge: k_i = 0 at active index "
                                                  + std::to_string(i + 1));
                g[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] / m.k[static_cast<size_t>(i)];
            }
        }
        detail::risky_density_row(m, g, field, lo, hi, density);
        const double risky = detail::risky_pair_pbar(m, density, field, lo, hi);
        pf.risky_value[static_cast<size_t>(j)] = risky;
        pf.b[static_cast<size_t>(j)] = (cond - risky) / field.pbar(0);
        pf.value[static_cast<size_t>(j)] = cond;
        if (j < path.n_steps) {
            const auto x = claim.integrand(j);
            for (int i = 0; i < path.n_factors; ++i)
                cond += x[static_cast<size_t>(i)] * path.dwq(j, i, m);
            field.advance(std::span<const double>(path.dW).subspan(
                static_cast<size_t>(j) * path.n_factors,
                static_cast<size_t>(path.n_factors)));
        }
    }
    return pf;
}

/// The risky leg of a solved portfolio as a DualElement at one step
/// (replays the curve to the requested time).
inline DualElement risky_element(const ModelSpec& m, const Portfolio& pf,
                                 const PathBundle& path, int step) {
    CurveField field(m, path.measure);
    for (int j = 0; j < step; ++j)
        field.advance(std::span<const double>(path.dW).subspan(
            static_cast<size_t>(j) * path.n_factors, static_cast<size_t>(path.n_factors)));
    const auto [lo, hi] = detail::risky_window(m);
    std::vector<double> density(static_cast<size_t>(m.lattice->size()), 0.0);
    std::vector<double> window_row(static_cast<size_t>(hi - lo + 1));
    detail::risky_density_row(m, pf.gamma[static_cast<size_t>(step)], field, lo, hi, window_row);
    for (int l = lo; l <= hi; ++l) density[static_cast<size_t>(l)] = window_row[static_cast<size_t>(l - lo)];
    return DualElement{0.0,
        CurveFunction::from_samples(m.lattice, std::move(density),
                                    lo * m.lattice->spacing(), hi * m.lattice->spacing(), 0)};
}

/// max_j |dV_j - <theta_j, pbar_j m> dt - sum_i <theta_j, pbar_j sigma_i> dW_j^{P,i}|.
/// All pairings are honest quadratures of the materialized density.
inline double self_financing_residual(const ModelSpec& m, const Portfolio& pf,
                                      const PathBundle& path) {
    CurveField field(m, path.measure);
    const auto [lo, hi] = detail::risky_window(m);
    std::vector<double> density(static_cast<size_t>(hi - lo + 1));
    double worst = 0.0;
    for (int j = 0; j < path.n_steps; ++j) {
        detail::risky_density_row(m, pf.gamma[static_cast<size_t>(j)], field, lo, hi, density);
        double increment = 0.0; // <theta, pbar m> dt + sum_i <theta, pbar sigma_i> dW^P
        for (int i = 1; i <= path.n_factors; ++i) {
            const double qi = detail::risky_pair_pbar_sigma(m, density, field, lo, hi, i);
            if (qi == 0.0) continue;
            const double dwp = path.dwq(j, i - 1, m)
                               - m.mhat[static_cast<size_t>(i - 1)] * path.dt;
            increment += qi * (dwp + m.mhat[static_cast<size_t>(i - 1)] * path.dt);
        }
        const double dv = pf.value[static_cast<size_t>(j) + 1] - pf.value[static_cast<size_t>(j)];
        worst = std::max(worst, std::abs(dv - increment));
        field.advance(std::span<const double>(path.dW).subspan(
            static_cast<size_t>(j) * path.n_factors, static_cast<size_t>(path.n_factors)));
    }
    return worst;
}

struct HedgeIdentityCheck {
    double max_equation_error = 0.0;   // |<theta, pbar sigma_i> - x^i|
    double max_risky_mismatch = 0.0;   // |risky value - sum x^i lambda_i / k_i|
    double replication_error = 0.0;    // |V_T - X|
};

/// Verify the two hedge equations and the risky-value identity by quadrature
/// at sampled steps, plus exact terminal replication.
inline HedgeIdentityCheck hedge_identity_check(const ModelSpec& m,
                                               const ClaimRepresentation& claim,
                                               const Portfolio& pf, const PathBundle& path,
                                               std::span<const int> sample_steps) {
    HedgeIdentityCheck out;
    CurveField field(m, path.measure);
    const auto [lo, hi] = detail::risky_window(m);
    std::vector<double> density(static_cast<size_t>(hi - lo + 1));
    int next = 0;
    std::vector<int> steps(sample_steps.begin(), sample_steps.end());
    std::sort(steps.begin(), steps.end());
    for (int j = 0; j <= path.n_steps && next < static_cast<int>(steps.size()); ++j) {
        if (j == steps[static_cast<size_t>(next)]) {
            ++next;
            const auto x = (j < path.n_steps) ? claim.integrand(j)
                                              : std::vector<double>(static_cast<size_t>(path.n_factors), 0.0);
            detail::risky_density_row(m, pf.gamma[static_cast<size_t>(j)], field, lo, hi, density);
            for (int i = 1; i <= path.n_factors; ++i) {
                const double qi = detail::risky_pair_pbar_sigma(m, density, field, lo, hi, i);
                out.max_equation_error = std::max(out.max_equation_error,
                                                  std::abs(qi - x[static_cast<size_t>(i - 1)]));
            }
            double series = 0.0;
            for (int i = 0; i < path.n_factors; ++i)
                series += pf.gamma[static_cast<size_t>(j)][static_cast<size_t>(i)]
                          * m.lambda[static_cast<size_t>(i)];
            out.max_risky_mismatch = std::max(out.max_risky_mismatch,
                std::abs(pf.risky_value[static_cast<size_t>(j)] - series));
        }
        if (j < path.n_steps)
            field.advance(std::span<const double>(path.dW).subspan(
                static_cast<size_t>(j) * path.n_factors, static_cast<size_t>(path.n_factors)));
    }
    out.replication_error = std::abs(pf.value.back() - claim_value(m, claim, path));
    return out;
}

using PortfolioBuilder = std::function<Portfolio(const PathBundle&)>;

/// theta_t = exp(int_0^t f_s(0) ds) delta_0; value stays 1 up to O(dt).
inline Portfolio bank_account_portfolio(const ModelSpec& m, const PathBundle& path) {
    Portfolio pf;
    pf.dt = path.dt;
    pf.n_steps = path.n_steps;
    pf.n_factors = path.n_factors;
    pf.b.resize(static_cast<size_t>(path.n_steps) + 1);
    pf.gamma.assign(static_cast<size_t>(path.n_steps) + 1,
                    std::vector<double>(static_cast<size_t>(path.n_factors), 0.0));
    pf.value.resize(static_cast<size_t>(path.n_steps) + 1);
    pf.risky_value.assign(static_cast<size_t>(path.n_steps) + 1, 0.0);
    CurveField field(m, path.measure, /*track_forward=*/true);
    double log_b = 0.0;
    for (int j = 0; j <= path.n_steps; ++j) {
        pf.b[static_cast<size_t>(j)] = std::exp(log_b);
        pf.value[static_cast<size_t>(j)] = pf.b[static_cast<size_t>(j)] * field.pbar(0);
        if (j == path.n_steps) break;
        log_b += field.forward_rate(0) * path.dt;
        field.advance(std::span<const double>(path.dW).subspan(
            static_cast<size_t>(j) * path.n_factors, static_cast<size_t>(path.n_factors)));
    }
    return pf;
}

struct AdmissibilityReport {
    double norm = 0.0;
    double dual_term = 0.0;     // E int ||theta_t||_{H'}^2 dt
    double adjoint_term = 0.0;  // E int ||sigma* theta_t pbar_t||_{l2}^2 dt
    double drift_term = 0.0;    // E (int |<theta_t, pbar_t m>| dt)^2
    double half_paths_norm = 0.0;
    bool finite = true;
};

/// Monte Carlo estimate of the admissibility norm. The H' term uses the
/// Riesz solver on the materialized delta-plus-density element per step.
inline AdmissibilityReport admissibility_norm(const ModelSpec& m,
                                              const PortfolioBuilder& build,
                                              int n_paths, Measure measure = Measure::Q) {
    DualNormSolver solver(m.lattice);
    const auto [lo, hi] = detail::risky_window(m);
    RunningStat path_dual, path_adj, path_drift;
    RunningStat half_dual, half_adj, half_drift;
    std::vector<double> density(static_cast<size_t>(hi - lo + 1));
    std::vector<double> full(static_cast<size_t>(m.lattice->size()), 0.0);
    for (int p = 0; p < n_paths; ++p) {
        const PathBundle path = simulate_path(m, measure, static_cast<uint64_t>(p));
        const Portfolio pf = build(path);
        CurveField field(m, measure);
        double int_dual = 0.0, int_adj = 0.0, int_drift = 0.0;
        for (int j = 0; j < path.n_steps; ++j) {
            detail::risky_density_row(m, pf.gamma[static_cast<size_t>(j)], field, lo, hi, density);
            std::fill(full.begin(), full.end(), 0.0);
            for (int l = lo; l <= hi; ++l)
                full[static_cast<size_t>(l)] = density[static_cast<size_t>(l - lo)];
            const double nd = solver.norm(pf.b[static_cast<size_t>(j)], full);
            double adj2 = 0.0, drift_abs = 0.0;
            for (int i = 1; i <= path.n_factors; ++i) {
                const double qi = detail::risky_pair_pbar_sigma(m, density, field, lo, hi, i);
                adj2 += qi * qi;
                drift_abs += m.mhat[static_cast<size_t>(i - 1)] * qi;
            }
            int_dual += nd * nd * path.dt;
            int_adj += adj2 * path.dt;
            int_drift += std::abs(drift_abs) * path.dt;
            field.advance(std::span<const double>(path.dW).subspan(
                static_cast<size_t>(j) * path.n_factors, static_cast<size_t>(path.n_factors)));
        }
        path_dual.add(int_dual);
        path_adj.add(int_adj);
        path_drift.add(int_drift * int_drift);
        if (p < n_paths / 2) {
            half_dual.add(int_dual);
            half_adj.add(int_adj);
            half_drift.add(int_drift * int_drift);
        }
    }
    AdmissibilityReport rep;
    rep.dual_term = path_dual.mean();
    rep.adjoint_term = path_adj.mean();
    rep.drift_term = path_drift.mean();
    rep.norm = std::sqrt(rep.dual_term + rep.adjoint_term + rep.drift_term);
    rep.half_paths_norm = std::sqrt(half_dual.mean() + half_adj.mean() + half_drift.mean());
    rep.finite = std::isfinite(rep.norm)
        && std::abs(rep.norm - rep.half_paths_norm) <= 0.5 * rep.norm + 1e-12;
    return rep;
}

} // namespace genhedge
