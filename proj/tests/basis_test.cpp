#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "genhedge/model.hpp"
#include "oracles.hpp"

using namespace genhedge;

namespace {
const ModelSpec& model() {
    static ModelSpec m = make_model(ModelParams{});
    return m;
}
}

TEST(Bumps, SingleBumpSupportAndNorm) {
    auto lat = std::make_shared<Lattice>(3.0, 2048);
    auto basis = build_bumps(lat, 1);
    const auto& h1 = basis->bump(1);
    EXPECT_DOUBLE_EQ(h1(0.74), 0.0);
    EXPECT_DOUBLE_EQ(h1(1.26), 0.0);
    EXPECT_GT(h1(1.0), 0.0);
    EXPECT_NEAR(norm_h(h1, 1), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(h1(0.0), 0.0);
    EXPECT_DOUBLE_EQ(h1.deriv1(0.0), 0.0);
    EXPECT_THROW(build_bumps(lat, 0), std::domain_error);
}

TEST(Bumps, OddBumpsAreTranslates) {
    const auto& b = *model().basis;
    for (double x : {2.8, 3.0, 3.2}) {
        EXPECT_NEAR(b.bump(3)(x), b.bump(1)(x - 2.0), 1e-15);
    }
    for (double x = 0.0; x < 2.0; x += 0.37) EXPECT_DOUBLE_EQ(b.bump(3)(x), 0.0);
}

TEST(Bumps, GramMatrixIsIdentity) {
    const auto& b = *model().basis;
    double worst = 0.0;
    for (int i = 1; i <= 6; ++i) {
        for (int j = 1; j <= 6; ++j) {
            const double g = inner_h(b.bump(i), b.bump(j), 1);
            worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
    }
    EXPECT_LE(worst, 1e-10);
}

TEST(Bumps, NonnegativeEverywhere) {
    const auto& b = *model().basis;
    for (const auto& h : b.bumps())
        for (double v : h.values()) EXPECT_GE(v, 0.0);
}

TEST(Lambda, VanishesAtOne) {
    const auto& b = *model().basis;
    for (int i = 1; i <= b.count(); ++i)
        EXPECT_NEAR(lambda_coefficient(b, i, 1.0), 0.0, 1e-8);
}

TEST(Lambda, TwoRoutesAgree) {
    // inner_h route equals (1 - a^2) int h_i e^{-a x}.
    const auto& b = *model().basis;
    for (double a : {0.5, 0.2, 1.7}) {
        const double route1 = lambda_coefficient(b, 2, a);
        const double integral = oracle::simpson(
            [&](double x) { return b.value(2, x) * std::exp(-a * x); }, 1.75, 2.25, 20000);
        EXPECT_NEAR(route1, (1.0 - a * a) * integral, 1e-10 * (1.0 + std::abs(route1)));
    }
}

TEST(Lambda, ScalingLaw) {
    const auto& b = *model().basis;
    const double l1 = lambda_coefficient(b, 1, 0.5);
    EXPECT_GT(l1, 0.0);
    for (int i = 2; i <= b.count(); ++i) {
        const double li = lambda_coefficient(b, i, 0.5);
        EXPECT_NEAR(li / l1, std::exp(-0.5 * (i - 1)), 1e-8 * std::exp(-0.5 * (i - 1)));
    }
}

TEST(SelectA, DefaultsToHalfAndRejectsOne) {
    const auto& b = *model().basis;
    EXPECT_DOUBLE_EQ(select_a(b, 12, 1e-6), 0.5);
    // a = 1 must never be returned even when requested floor is tiny.
    const double a = select_a(b, 12, 1e-12);
    EXPECT_GT(std::abs(a - 1.0), 1e-3);
    EXPECT_THROW(select_a(b, 12, 10.0), config_error);
    EXPECT_THROW(select_a(b, 12, -1.0), std::domain_error);
}

TEST(SelectK, SignsAndCaps) {
    const ModelSpec& m = model();
    for (int i = 1; i <= m.n_factors; ++i) {
        const double ki = m.k[i - 1];
        const double li = m.lambda[i - 1];
        EXPECT_GT(ki * li, 0.0) << "sign mismatch at " << i;
        EXPECT_LE(std::abs(ki) * i * i,
                  std::min(std::abs(li), 1.0 / std::sqrt(1.0 + m.hn2_sq[i - 1])) * (1.0 + 1e-14));
    }
    EXPECT_THROW(select_k(*m.basis, m.a, std::vector<double>(12, -1.0)), std::domain_error);
}

TEST(SelectK, DivergenceDriver) {
    // (1/i) lambda_i / k_i >= i, exactly by the cap construction.
    const ModelSpec& m = model();
    for (int i = 1; i <= m.n_factors; i += 2) {
        const double ratio = m.lambda[i - 1] / m.k[i - 1];
        EXPECT_GE(ratio / i, static_cast<double>(i) * (1.0 - 1e-12));
    }
}

TEST(Sigma, VanishesAtZeroAndCancelsAgainstP0) {
    const ModelSpec& m = model();
    for (int i = 1; i <= m.n_factors; ++i) {
        EXPECT_DOUBLE_EQ(m.sigma[i - 1](0.0), 0.0);
        // p0 sigma_i = k_i h_i pointwise on the lattice.
        const auto sv = m.sigma[i - 1].values();
        const auto hv = m.basis->bump(i).values();
        const auto pv = m.p0.values();
        double worst = 0.0;
        for (size_t n = 0; n < sv.size(); ++n)
            worst = std::max(worst, std::abs(pv[n] * sv[n] - m.k[i - 1] * hv[n]));
        EXPECT_LE(worst, 1e-15);
    }
}

TEST(Sigma, VolatilitySumWithinDeclaredBound) {
    const ModelSpec& m = model();
    EXPECT_LE(m.volatility_sum, m.declared_sum_bound);
    for (int i = 1; i <= m.n_factors; ++i) {
        const double h2 = inner_h(m.sigma[i - 1], m.sigma[i - 1], 2);
        EXPECT_LE(h2, m.k[i - 1] * m.k[i - 1] * (1.0 + m.hn2_sq[i - 1]) * 1.0001);
    }
}

TEST(MarketPriceOfRisk, Values) {
    const auto mh = market_price_of_risk(12);
    EXPECT_DOUBLE_EQ(mh[0], 1.0);
    EXPECT_DOUBLE_EQ(mh[1], 0.0);
    EXPECT_DOUBLE_EQ(mh[2], 1.0 / 3.0);
    double sum = 0.0;
    for (double v : mh) sum += v * v;
    const double want = 1.0 + 1.0 / 9 + 1.0 / 25 + 1.0 / 49 + 1.0 / 81 + 1.0 / 121;
    EXPECT_NEAR(sum, want, 1e-15);
    EXPECT_NEAR(model().c, 1.0 / std::sqrt(want), 1e-15);
}

TEST(Drift, VanishesAtZero) {
    const CurveFunction m = drift_curve(model());
    EXPECT_DOUBLE_EQ(m(0.0), 0.0);
}

TEST(UniformCondition, DefaultScheduleIsIdentity) {
    const auto rep = check_uniform_condition(model(), 100);
    EXPECT_TRUE(rep.passed);
    EXPECT_GE(rep.min_slack, 1.0 - 1e-12);
    // t = 0 unit vectors: ratio q_i^s |k_i| * e^{aT} >= 1.
    const ModelSpec& m = model();
    for (int i = 0; i < m.n_factors; ++i)
        EXPECT_GE(m.k_cond * m.q[i] * std::abs(m.k[i]), 1.0 - 1e-12);
}

TEST(UniformCondition, SabotagedWeightsFail) {
    const ModelSpec& m = model();
    const auto rep = check_uniform_condition_with(m, std::vector<double>(12, 1.0), 1.0,
                                                  std::exp(m.a * m.time_horizon), 100);
    EXPECT_FALSE(rep.passed);
    EXPECT_FALSE(rep.witness_x.empty());
}

TEST(Model, LambdaHatMatchesLambda) {
    const ModelSpec& m = model();
    for (int i = 0; i < m.n_factors; ++i)
        EXPECT_NEAR(m.lambda_hat[i] / m.lambda[i], 1.0, 1e-8);
}

TEST(Model, RejectsBadParameters) {
    ModelParams p;
    p.a = 1.0;
    EXPECT_THROW(make_model(p), config_error);
    ModelParams q;
    q.n_factors = 0;
    EXPECT_THROW(make_model(q), config_error);
}
