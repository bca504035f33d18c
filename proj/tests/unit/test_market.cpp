#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "impactdp/market.hpp"
#include "reference.hpp"

using namespace impactdp;
using impactdp::testing::random_path;
using impactdp::testing::random_trades;
using impactdp::testing::ref_kappa;
using impactdp::testing::ref_wealth;
using impactdp::testing::RefPath;

namespace {

// zeta0 = 0, r = 0, delta = (1, 10, 10), P = 0.
MarketPath friction_path() { return MarketPath(0.0, {0, 0, 0, 0}, {0, 0, 0}, {1, 10, 10}); }

}  // namespace

TEST(Rho, ZeroResilienceIsOne) {
    const std::vector<double> r{0.0, 0.0};
    EXPECT_EQ(rho(r, 0, 2), 1.0);
}

TEST(Rho, EqualIndicesGiveOne) {
    const std::vector<double> r{0.3, 1.7, 0.2};
    for (int t = 0; t <= 3; ++t) EXPECT_EQ(rho(r, t, t), 1.0);
}

TEST(Rho, ExponentOfSum) {
    const std::vector<double> r{0.1, 0.2};
    EXPECT_NEAR(rho(r, 0, 2), 0.7408182206817179, 1e-15);
}

TEST(Rho, RejectsBadIndices) {
    const std::vector<double> r{0.1, 0.2};
    EXPECT_THROW(rho(r, 2, 1), std::invalid_argument);
    EXPECT_THROW(rho(r, -1, 1), std::invalid_argument);
    EXPECT_THROW(rho(r, 0, 3), std::invalid_argument);
}

TEST(Rho, PathTableMatchesFreeFunction) {
    std::mt19937_64 rng(7);
    const RefPath p = random_path(rng, 5);
    const MarketPath m = p.market();
    for (int t = 0; t <= 5; ++t)
        for (int j = 0; j <= t; ++j) EXPECT_NEAR(m.rho(j, t), rho(p.resilience, j, t), 1e-15);
}

TEST(SpreadStep, DecaysWithoutTrade) {
    EXPECT_NEAR(spread_step(0.3, 0.7, 1.0, 0.0), 0.14897559113742284, 1e-15);
}

TEST(SpreadStep, IdentityWithoutDecayOrTrade) {
    EXPECT_EQ(spread_step(0.42, 0.0, 3.0, 0.0), 0.42);
}

TEST(SpreadStep, AddsTradeOverDepth) {
    EXPECT_DOUBLE_EQ(spread_step(0.5, 0.0, 2.0, -1.0), 1.0);
}

TEST(SpreadStep, RejectsNonPositiveDepth) {
    EXPECT_THROW(spread_step(0.5, 0.0, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(spread_step(0.5, 0.0, -1.0, 1.0), std::invalid_argument);
}

TEST(CashStep, NoTradeKeepsCash) { EXPECT_EQ(cash_step(3.25, 10.0, 0.5, 0.0), 3.25); }

TEST(CashStep, BuyPaysSpread) { EXPECT_DOUBLE_EQ(cash_step(0.0, 10.0, 0.5, 1.0), -10.5); }

TEST(CashStep, SellReceivesMidMinusSpread) { EXPECT_DOUBLE_EQ(cash_step(0.0, 10.0, 0.5, -1.0), 9.5); }

TEST(Kappa, ZeroLastTradeIsZero) {
    std::mt19937_64 rng(3);
    const RefPath p = random_path(rng, 4);
    std::vector<double> h = random_trades(rng, 3, 2.0);
    h.push_back(0.0);
    EXPECT_EQ(kappa(p.market(), h), 0.0);
}

TEST(Kappa, FrictionPathExamples) {
    const MarketPath m = friction_path();
    EXPECT_NEAR(kappa(m, std::vector<double>{1, 1}), -1.1, 1e-15);
    EXPECT_NEAR(kappa(m, std::vector<double>{1, 1, -2}), -2.6, 1e-15);
}

TEST(Kappa, RejectsBadLength) {
    const MarketPath m = friction_path();
    EXPECT_THROW(kappa(m, std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(kappa(m, std::vector<double>{1, 1, 1, 1}), std::invalid_argument);
}

TEST(Kappa, MatchesReference) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int T = 2 + static_cast<int>(rng() % 5);
        const RefPath p = random_path(rng, T);
        const auto h = random_trades(rng, T, 3.0);
        const MarketPath m = p.market();
        for (int t = 1; t <= T; ++t) {
            const std::vector<double> prefix(h.begin(), h.begin() + t);
            const double expected = ref_kappa(p, prefix);
            EXPECT_NEAR(kappa(m, prefix), expected, 1e-12 * (1.0 + std::abs(expected)));
        }
    }
}

TEST(LambdaBound, ZeroTrade) {
    const LambdaBound b = lambda_bound(3.0, 2.0, 0.0);
    EXPECT_EQ(b.value, 0.0);
    EXPECT_GE(b.cap, 0.0);
}

TEST(LambdaBound, ZeroPriceCapIsZero) {
    const LambdaBound b = lambda_bound(0.0, 2.0, 1.5);
    EXPECT_DOUBLE_EQ(b.value, -1.125);
    EXPECT_EQ(b.cap, 0.0);
}

TEST(LambdaBound, CapAttained) {
    const LambdaBound b = lambda_bound(2.0, 1.0, -1.0);
    EXPECT_DOUBLE_EQ(b.value, 1.0);
    EXPECT_DOUBLE_EQ(b.cap, 1.0);
}

TEST(LambdaBound, RejectsNonPositiveDepth) {
    EXPECT_THROW(lambda_bound(1.0, 0.0, 1.0), std::invalid_argument);
}

TEST(TerminalWealth, ZeroTradesGiveZero) {
    std::mt19937_64 rng(5);
    const RefPath p = random_path(rng, 4);
    const std::vector<double> h(4, 0.0);
    EXPECT_EQ(terminal_wealth_explicit(p.market(), h), 0.0);
    const RecursiveWealth w = terminal_wealth_recursive(p.market(), h);
    EXPECT_EQ(w.cash, 0.0);
    for (int t = 1; t <= 4; ++t) EXPECT_NEAR(w.spread_trace[t - 1], p.zeta0 * p.market().rho(0, t), 1e-15);
}

TEST(TerminalWealth, FrictionPathExamples) {
    const MarketPath m = friction_path();
    EXPECT_NEAR(terminal_wealth_explicit(m, std::vector<double>{1, 1, -2}), -4.7, 1e-12);
    EXPECT_NEAR(terminal_wealth_explicit(m, std::vector<double>{1.5, 0, -1.5}), -4.725, 1e-12);
    EXPECT_NEAR(terminal_wealth_recursive(m, std::vector<double>{1, 1, -2}).cash, -4.7, 1e-12);
}

TEST(TerminalWealth, RejectsBadLength) {
    const MarketPath m = friction_path();
    EXPECT_THROW(terminal_wealth_explicit(m, std::vector<double>{1, -1}), std::invalid_argument);
    EXPECT_THROW(terminal_wealth_recursive(m, std::vector<double>{1, -1}), std::invalid_argument);
}

TEST(TerminalWealth, ExplicitEqualsSumOfKappa) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const int T = 2 + static_cast<int>(rng() % 5);
        const RefPath p = random_path(rng, T);
        const auto h = random_trades(rng, T, 3.0);
        const double expected = ref_wealth(p, h);
        EXPECT_NEAR(terminal_wealth_explicit(p.market(), h), expected, 1e-12 * (1.0 + std::abs(expected)));
    }
}

TEST(TerminalWealthProperty, ExplicitAndRecursiveAgree) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const int T = 2 + static_cast<int>(rng() % 5);
        const RefPath p = random_path(rng, T);
        const auto h = random_trades(rng, T, 5.0);
        const double a = terminal_wealth_explicit(p.market(), h);
        const double b = terminal_wealth_recursive(p.market(), h).cash;
        ASSERT_LE(std::abs(a - b), 1e-12 * (1.0 + std::abs(a))) << "trial " << trial;
    }
}

TEST(TerminalWealthProperty, SpreadTraceNonNegative) {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 500; ++trial) {
        const int T = 2 + static_cast<int>(rng() % 5);
        const RefPath p = random_path(rng, T);
        for (double s : terminal_wealth_recursive(p.market(), random_trades(rng, T, 5.0)).spread_trace)
            ASSERT_GE(s, 0.0);
    }
}

TEST(KappaProperty, LambdaChain) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 2000; ++trial) {
        const int T = 2 + static_cast<int>(rng() % 5);
        const RefPath p = random_path(rng, T);
        const auto h = random_trades(rng, T, 4.0);
        const MarketPath m = p.market();
        for (int t = 1; t <= T; ++t) {
            const double k = kappa(m, std::span<const double>(h.data(), t));
            const LambdaBound b = lambda_bound(m.price(t), m.depth(t), h[t - 1]);
            ASSERT_LE(k, b.value + 1e-12);
            ASSERT_LE(b.value, b.cap + 1e-12);
        }
    }
}

TEST(KappaProperty, ConcaveInLastTrade) {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> d(-4.0, 4.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const int T = 2 + static_cast<int>(rng() % 5);
        const RefPath p = random_path(rng, T);
        const MarketPath m = p.market();
        auto h = random_trades(rng, T, 4.0);
        const double a = d(rng), b = d(rng);
        h[T - 1] = a;
        const double ka = kappa(m, h);
        h[T - 1] = b;
        const double kb = kappa(m, h);
        h[T - 1] = 0.5 * (a + b);
        const double km = kappa(m, h);
        ASSERT_GE(km, 0.5 * (ka + kb) - 1e-12 * (1.0 + std::abs(km)));
    }
}

TEST(KappaProperty, ClaimLowerBounds) {
    std::mt19937_64 rng(31);
    for (double m : {1.0, 5.0, 10.0}) {
        for (int trial = 0; trial < 2000; ++trial) {
            const int T = 2 + static_cast<int>(rng() % 5);
            const RefPath p = random_path(rng, T);
            const MarketPath path = p.market();
            const double dmin = path.min_depth();
            auto h = random_trades(rng, T, m);
            for (int t = 1; t <= T; ++t) {
                const double k = kappa(path, std::span<const double>(h.data(), t));
                ASSERT_GE(k, -m * p.zeta0 - t * m * m / dmin - m * std::abs(path.price(t)) - 1e-12);
            }
            double x = 0.0;
            for (int t = 0; t < T - 1; ++t) x += h[t];
            h[T - 1] = -x;
            const double last = kappa(path, h);
            const double n = T - 1;
            ASSERT_GE(last, -n * m * p.zeta0 - n * m * m * (2 * T - 2) / dmin - n * m * std::abs(path.price(T)) -
                                1e-12 * (1.0 + std::abs(last)));
        }
    }
}

TEST(MarketPath, ValidatesInput) {
    EXPECT_THROW(MarketPath(0.0, {0, 0}, {0}, {1}), std::invalid_argument);
    EXPECT_THROW(MarketPath(-0.1, {0, 0, 0}, {0, 0}, {1, 1}), std::invalid_argument);
    EXPECT_THROW(MarketPath(0.0, {0, 0, 0}, {-1, 0}, {1, 1}), std::invalid_argument);
    EXPECT_THROW(MarketPath(0.0, {0, 0, 0}, {0, 0}, {1, 0}), std::invalid_argument);
    EXPECT_THROW(MarketPath(0.0, {0, 0}, {0, 0}, {1, 1}), std::invalid_argument);
}

TEST(TradeSequence, PositionAndLiquidation) {
    TradeSequence s{{1.0, 0.5, -1.5}};
    EXPECT_EQ(s.position(2), 1.5);
    EXPECT_TRUE(s.liquidating());
    s.increments.back() = -1.4;
    EXPECT_FALSE(s.liquidating());
}

TEST(Advance, ComposesToExplicitWealth) {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 100; ++trial) {
        const int T = 2 + static_cast<int>(rng() % 5);
        const RefPath p = random_path(rng, T);
        const MarketPath m = p.market();
        const auto h = random_trades(rng, T, 3.0);
        MarketState s{0.0, p.zeta0, 0.0};
        for (int t = 1; t <= T; ++t) s = advance(s, m.resilience(t - 1), m.depth(t), m.price(t), h[t - 1]);
        const double w = terminal_wealth_explicit(m, h);
        EXPECT_NEAR(s.cash, w, 1e-12 * (1.0 + std::abs(w)));
    }
}
