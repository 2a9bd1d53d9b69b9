#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "genhedge/hedging.hpp"
#include "genhedge/operators.hpp"
#include "oracles.hpp"

using namespace genhedge;

namespace {

const ModelSpec& model() {
    static ModelSpec m = make_model(ModelParams{});
    return m;
}

const ModelSpec& small_model() {
    static ModelSpec m = [] {
        ModelParams p;
        p.time_steps = 128;
        return make_model(p);
    }();
    return m;
}

// A generic predictable claim: integrand depends on the step and on zeta up
// to the step's left endpoint.
ClaimRepresentation generic_claim(const ModelSpec& m, const PathBundle& path) {
    ClaimRepresentation c;
    c.mean = 1.7;
    c.max_active_index = 7;
    const std::vector<double> zeta = path.zeta;
    const int n = m.n_factors;
    c.integrand = [zeta, n](int step) {
        std::vector<double> x(static_cast<size_t>(n), 0.0);
        const double level = 0.1 * (1.0 + 0.5 * std::sin(zeta[static_cast<size_t>(step)]));
        for (int i = 1; i <= 7; ++i) x[static_cast<size_t>(i - 1)] = level / i;
        return x;
    };
    return c;
}

ClaimRepresentation unit_claim_at_zero(const ModelSpec& m, int index) {
    ClaimRepresentation c;
    c.mean = 0.0;
    c.max_active_index = index;
    const int n = m.n_factors;
    c.integrand = [n, index](int step) {
        std::vector<double> x(static_cast<size_t>(n), 0.0);
        if (step == 0) x[static_cast<size_t>(index - 1)] = 1.0;
        return x;
    };
    return c;
}

} // namespace

TEST(Operators, FactorizationAndIsometry) {
    const ModelSpec& m = model();
    DiagonalOperatorFamily ops(m);
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double t : {0.0, 0.4, 1.0}) {
        std::vector<double> y(static_cast<size_t>(m.n_factors));
        for (auto& v : y) v = u(gen);
        // A_t = B*_t B_t
        const auto ay = ops.apply_A(t, y);
        const auto by = ops.apply_B(t, y);
        const auto bstar_by = ops.apply_B_star(t, by);
        for (int i = 0; i < m.n_factors; ++i)
            EXPECT_NEAR(bstar_by[i], ay[i], 1e-10 * (1.0 + std::abs(ay[i])));
        // A^{1/2} o A^{1/2} = A
        const auto half = ops.apply_A_sqrt(t, y);
        const auto twice = ops.apply_A_sqrt(t, half);
        for (int i = 0; i < m.n_factors; ++i)
            EXPECT_NEAR(twice[i], ay[i], 1e-12 * (1.0 + std::abs(ay[i])));
        // S_t isometric on truncations
        double ny = 0.0;
        for (double v : y) ny += v * v;
        EXPECT_NEAR(norm_h(ops.apply_S(y), 1), std::sqrt(ny), 1e-8 * (1.0 + std::sqrt(ny)));
    }
}

TEST(Operators, SAInverseMapsUnitVectors) {
    const ModelSpec& m = model();
    DiagonalOperatorFamily ops(m);
    const double t = 0.3;
    for (int i : {1, 4, 9}) {
        std::vector<double> e(static_cast<size_t>(m.n_factors), 0.0);
        e[static_cast<size_t>(i - 1)] = 1.0;
        const CurveFunction g = ops.apply_S_A_invsqrt(t, e);
        const double scale = std::exp(m.a * t) / m.k[static_cast<size_t>(i - 1)];
        double worst = 0.0;
        const auto gv = g.values();
        const auto hv = m.basis->bump(i).values();
        for (size_t l = 0; l < gv.size(); ++l)
            worst = std::max(worst, std::abs(gv[l] - scale * hv[l]));
        EXPECT_LE(worst / std::abs(scale), 1e-10);
    }
}

TEST(Operators, SingularIndexThrows) {
    const ModelSpec z = zero_volatility_variant(model());
    DiagonalOperatorFamily ops(z);
    std::vector<double> y(static_cast<size_t>(z.n_factors), 1.0);
    EXPECT_THROW(ops.apply_A_invsqrt(0.0, y), singular_operator_error);
}

TEST(SolveHedge, PureBankAccountClaim) {
    const ModelSpec& m = small_model();
    const PathBundle path = simulate_path(m, Measure::Q, 2);
    ClaimRepresentation c;
    c.mean = 2.5;
    c.integrand = [&m](int) { return std::vector<double>(static_cast<size_t>(m.n_factors), 0.0); };
    const Portfolio pf = solve_hedge(m, c, path);
    CurveField field(m, Measure::Q);
    for (int j = 0; j <= 16; ++j) {
        EXPECT_DOUBLE_EQ(pf.risky_value[static_cast<size_t>(j)], 0.0);
        EXPECT_NEAR(pf.b[static_cast<size_t>(j)], 2.5 / field.pbar(0), 1e-12);
        if (j < 16)
            field.advance(std::span<const double>(path.dW).subspan(
                static_cast<size_t>(j) * m.n_factors, static_cast<size_t>(m.n_factors)));
    }
}

TEST(SolveHedge, UnitVectorRiskyValueMatchesOracle) {
    const ModelSpec& m = model();
    const PathBundle path = simulate_path(m, Measure::Q, 1);
    for (int i : {1, 3, 6}) {
        const Portfolio pf = solve_hedge(m, unit_claim_at_zero(m, i), path);
        // (h_i, p0)_{H^1} / k_i by an independent Simpson oracle
        const auto& b = *m.basis;
        const double integral = oracle::simpson(
            [&](double x) { return b.value(i, x) * std::exp(-m.a * x); },
            i - 0.25, i + 0.25, 40000);
        const double want = (1.0 - m.a * m.a) * integral / m.k[static_cast<size_t>(i - 1)];
        EXPECT_NEAR(pf.risky_value[0], want, 1e-8 * (1.0 + std::abs(want)));
    }
    EXPECT_THROW(solve_hedge(m, unit_claim_at_zero(m, m.n_factors + 1), path),
                 std::domain_error);
}

TEST(SolveHedge, HedgeEquationsAndReplication) {
    const ModelSpec& m = small_model();
    for (uint64_t p : {0ull, 5ull}) {
        const PathBundle path = simulate_path(m, Measure::Q, p);
        const ClaimRepresentation c = generic_claim(m, path);
        const Portfolio pf = solve_hedge(m, c, path);
        const std::vector<int> samples{0, 17, 64, 100, m.time_steps};
        const auto check = hedge_identity_check(m, c, pf, path, samples);
        EXPECT_LE(check.max_equation_error, 1e-8);
        EXPECT_LE(check.max_risky_mismatch, 1e-8);
        EXPECT_LE(check.replication_error, 1e-10);
    }
}

TEST(SolveHedge, ReplicationOnPMeasurePaths) {
    const ModelSpec& m = small_model();
    const PathBundle path = simulate_path(m, Measure::P, 9);
    const ClaimRepresentation c = generic_claim(m, path);
    const Portfolio pf = solve_hedge(m, c, path);
    EXPECT_NEAR(pf.value.back(), claim_value(m, c, path), 1e-10);
}

TEST(SolveHedge, UniquenessWitness) {
    const ModelSpec& m = small_model();
    const PathBundle path = simulate_path(m, Measure::Q, 3);
    const ClaimRepresentation c1 = generic_claim(m, path);
    // Same claim, algebraically reshuffled integrand.
    ClaimRepresentation c2 = c1;
    const std::vector<double> zeta = path.zeta;
    const int n = m.n_factors;
    c2.integrand = [zeta, n](int step) {
        std::vector<double> x(static_cast<size_t>(n), 0.0);
        const double s = std::sin(zeta[static_cast<size_t>(step)]);
        for (int i = 1; i <= 7; ++i)
            x[static_cast<size_t>(i - 1)] = (0.1 + 0.05 * s) / i;
        return x;
    };
    const Portfolio a = solve_hedge(m, c1, path);
    const Portfolio b = solve_hedge(m, c2, path);
    for (size_t j = 0; j < a.b.size(); ++j) {
        EXPECT_NEAR(a.b[j], b.b[j], 1e-12 * (1.0 + std::abs(a.b[j])));
        for (int i = 0; i < m.n_factors; ++i)
            EXPECT_NEAR(a.gamma[j][static_cast<size_t>(i)], b.gamma[j][static_cast<size_t>(i)],
                        1e-12 * (1.0 + std::abs(a.gamma[j][static_cast<size_t>(i)])));
    }
}

TEST(SolveHedge, SingularOperatorOnDegenerateModel) {
    const ModelSpec z = zero_volatility_variant(model());
    const PathBundle path = simulate_path(z, Measure::Q, 0);
    EXPECT_THROW(solve_hedge(z, unit_claim_at_zero(z, 2), path), singular_operator_error);
}

TEST(SelfFinancing, ConstructedHedgeIsClosed) {
    const ModelSpec& m = small_model();
    const PathBundle path = simulate_path(m, Measure::Q, 4);
    const ClaimRepresentation c = generic_claim(m, path);
    const Portfolio pf = solve_hedge(m, c, path);
    EXPECT_LE(self_financing_residual(m, pf, path), 1e-10);
}

TEST(SelfFinancing, BankAccountIsDiscretizationOrder) {
    const ModelSpec& m = small_model();
    const PathBundle path = simulate_path(m, Measure::Q, 6);
    const Portfolio pf = bank_account_portfolio(m, path);
    EXPECT_LE(self_financing_residual(m, pf, path), 1e-4);
}

TEST(SelfFinancing, PerturbationIsDetected) {
    const ModelSpec& m = small_model();
    const PathBundle path = simulate_path(m, Measure::Q, 4);
    const ClaimRepresentation c = generic_claim(m, path);
    Portfolio pf = solve_hedge(m, c, path);
    const int hit = 40;
    pf.b[hit] += 1e-3;
    pf.value[hit] += 1e-3 * std::exp(-m.a * 0.0); // value moves with b at pbar(0) scale: recompute below
    // Recompute the value shift honestly: V = b pbar(0) + risky.
    CurveField field(m, Measure::Q);
    for (int j = 0; j < hit; ++j)
        field.advance(std::span<const double>(path.dW).subspan(
            static_cast<size_t>(j) * m.n_factors, static_cast<size_t>(m.n_factors)));
    pf.value[hit] = pf.value[hit] - 1e-3 + 1e-3 * field.pbar(0);
    EXPECT_GE(self_financing_residual(m, pf, path), 1e-4);
}

TEST(RiskyElement, PureDensitySupportedAwayFromZero) {
    const ModelSpec& m = small_model();
    const PathBundle path = simulate_path(m, Measure::Q, 7);
    const ClaimRepresentation c = generic_claim(m, path);
    const Portfolio pf = solve_hedge(m, c, path);
    const DualElement risky = risky_element(m, pf, path, 64);
    EXPECT_DOUBLE_EQ(risky.delta0_coefficient, 0.0);
    EXPECT_GT(risky.regular_part.support_lo(), 0.0);
    EXPECT_NEAR(pair_dual(risky, m.p0.values()), 0.0, 1e30); // sanity: pairable
}

TEST(Admissibility, ZeroAndBankAccount) {
    const ModelSpec& m = small_model();
    PortfolioBuilder zero = [&](const PathBundle& path) {
        Portfolio pf;
        pf.dt = path.dt;
        pf.n_steps = path.n_steps;
        pf.n_factors = path.n_factors;
        pf.b.assign(static_cast<size_t>(path.n_steps) + 1, 0.0);
        pf.gamma.assign(static_cast<size_t>(path.n_steps) + 1,
                        std::vector<double>(static_cast<size_t>(path.n_factors), 0.0));
        pf.value.assign(static_cast<size_t>(path.n_steps) + 1, 0.0);
        pf.risky_value.assign(static_cast<size_t>(path.n_steps) + 1, 0.0);
        return pf;
    };
    const auto zrep = admissibility_norm(m, zero, 2);
    EXPECT_DOUBLE_EQ(zrep.norm, 0.0);
    EXPECT_TRUE(zrep.finite);

    PortfolioBuilder bank = [&](const PathBundle& path) {
        return bank_account_portfolio(m, path);
    };
    const auto brep = admissibility_norm(m, bank, 4);
    EXPECT_TRUE(brep.finite);
    EXPECT_DOUBLE_EQ(brep.adjoint_term, 0.0);
    EXPECT_DOUBLE_EQ(brep.drift_term, 0.0);
    // dominated by int b_t^2 ||delta_0||^2 dt with b_t ~ e^{at}
    const double delta_norm_sq = std::cosh(m.x_max()) / std::sinh(m.x_max());
    const double expect = (std::exp(2.0 * m.a * m.time_horizon) - 1.0) / (2.0 * m.a)
                          * delta_norm_sq;
    EXPECT_NEAR(brep.dual_term, expect, 0.05 * expect);
}

TEST(Admissibility, TruncatedSeriesNormGrows) {
    const ModelSpec& m = small_model();
    double prev = 0.0;
    for (int n : {3, 7, 11}) {
        PortfolioBuilder builder = [&m, n](const PathBundle& path) {
            ClaimRepresentation c;
            c.mean = 0.0;
            c.max_active_index = n;
            const int nf = m.n_factors;
            const std::vector<double> e = m.e;
            c.integrand = [nf, n, e](int) {
                std::vector<double> x(static_cast<size_t>(nf), 0.0);
                for (int i = 1; i <= n; ++i) x[static_cast<size_t>(i - 1)] = e[static_cast<size_t>(i - 1)];
                return x;
            };
            return solve_hedge(m, c, path);
        };
        const auto rep = admissibility_norm(m, builder, 2);
        EXPECT_GT(rep.norm, prev);
        prev = rep.norm;
    }
    EXPECT_GT(prev, 1e2); // the 1/k_i blow-up is already large at n = 11
}
