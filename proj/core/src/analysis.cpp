#include "impactdp/analysis.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "impactdp/market.hpp"

namespace impactdp {
namespace {

constexpr double kSlopeOffset = 1e-6;
constexpr double kKinkThreshold = 1e-3;
constexpr double kViolationSlack = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

MarketPath zero_price_path(const ScenarioTree& tree, std::size_t leaf) {
    const LeafPath path = extract_path(tree, leaf);
    const MarketPath& m = path.market;
    const int T = m.horizon();
    std::vector<double> resilience(T), depth(T);
    for (int t = 0; t < T; ++t) {
        resilience[t] = m.resilience(t);
        depth[t] = m.depth(t + 1);
    }
    return MarketPath(m.zeta0(), std::vector<double>(T + 1, 0.0), resilience, depth);
}

std::vector<double> liquidating(std::span<const double> schedule) {
    std::vector<double> trades(schedule.begin(), schedule.end());
    double position = 0.0;
    for (double h : trades) position += h;
    trades.push_back(-position);
    return trades;
}

}  // namespace

double friction_quadratic(double h1, double h2) {
    return 2.1 * h1 * h1 + 0.3 * h2 * h2 + 2.3 * h1 * h2;
}

NonconvexityReport nonconvexity_demo() {
    NonconvexityReport r;
    r.q_h = friction_quadratic(1.0, 1.0);
    r.q_g = friction_quadratic(1.5, 0.0);
    r.average = 0.5 * (r.q_h + r.q_g);
    r.midpoint = friction_quadratic(1.25, 0.5);
    r.margin = r.midpoint - r.average;
    r.violated = r.midpoint > r.average;

    const ScenarioTree tree = generate(preset("notconvex"));
    const MarketPath path = zero_price_path(tree, tree.leaves().front());
    for (const auto& schedule : {std::vector<double>{1.0, 1.0}, std::vector<double>{1.5, 0.0},
                                 std::vector<double>{1.25, 0.5}}) {
        r.explicit_friction.push_back(-terminal_wealth_explicit(path, liquidating(schedule)));
    }
    return r;
}

double indirect_utility(double z) {
    if (!(z > 1.0)) throw std::invalid_argument("indirect_utility: z must exceed 1");
    return std::max(std::log(z), 0.5 * (std::log(z + 2.0) + std::log(z - 1.0)));
}

IndirectUtilityReport indirect_utility_demo(std::span<const double> z_grid) {
    for (double z : z_grid)
        if (!(z > 1.0)) throw std::invalid_argument("indirect_utility_demo: every z must exceed 1");
    IndirectUtilityReport r;
    r.curve.reserve(z_grid.size());
    for (double z : z_grid) r.curve.emplace_back(z, indirect_utility(z));
    r.value_at_kink = indirect_utility(2.0);
    r.left_slope = (r.value_at_kink - indirect_utility(2.0 - kSlopeOffset)) / kSlopeOffset;
    r.right_slope = (indirect_utility(2.0 + kSlopeOffset) - r.value_at_kink) / kSlopeOffset;
    r.kink = r.right_slope - r.left_slope > kKinkThreshold;
    r.concavity_failure = r.right_slope > r.left_slope;
    return r;
}

double expected_friction(const ScenarioTree& tree, std::span<const double> schedule) {
    if (static_cast<int>(schedule.size()) != tree.horizon() - 1)
        throw std::invalid_argument("expected_friction: schedule needs T-1 trades");
    const auto trades = liquidating(schedule);
    double total = 0.0;
    for (std::size_t leaf : tree.leaves()) {
        const double p = tree.path_probability(leaf);
        total += p * -terminal_wealth_explicit(zero_price_path(tree, leaf), trades);
    }
    return total;
}

ConvexityReport convexity_probe(const ScenarioTree& tree, std::size_t trials, const ActionGrid& grid,
                                std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(tree.horizon() - 1);
    const auto& values = grid.values();
    auto draw = [&](std::uint64_t stream, std::uint64_t index) {
        const double u = counter_uniform(seed, stream, index);
        const auto k = std::min(values.size() - 1, static_cast<std::size_t>(u * values.size()));
        return values[k];
    };

    ConvexityReport report;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::vector<double> h(n, 0.0), g(n, 0.0);
        if (trial == 0 && n >= 2) {
            h[0] = 1.0;
            h[1] = 1.0;
            g[0] = 1.5;
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                h[i] = draw(2 * trial, i);
                g[i] = draw(2 * trial + 1, i);
            }
        }
        std::vector<double> mid(n);
        for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (h[i] + g[i]);

        const double average = 0.5 * (expected_friction(tree, h) + expected_friction(tree, g));
        const double midpoint = expected_friction(tree, mid);
        ++report.pairs_tested;
        if (midpoint > average + kViolationSlack)
            report.violations.push_back({std::move(h), std::move(g), midpoint, average});
    }
    return report;
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const std::uint64_t bits = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

MonteCarloEstimate monte_carlo_eval(const ScenarioTree& tree, const PredictableAssignment& strategy,
                                    const Utility& u, double z, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("monte_carlo_eval: need at least 2 samples");
    if (!strategy.liquidating()) throw std::invalid_argument("monte_carlo_eval: strategy does not liquidate");

    std::vector<double> leaf_utility(tree.size(), 0.0);
    for (std::size_t leaf : tree.leaves()) {
        const LeafPath path = extract_path(tree, leaf);
        const double wealth = terminal_wealth_explicit(path.market, strategy.trades_along(leaf));
        leaf_utility[leaf] = u(z + wealth - path.endowment);
    }

    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t node = tree.root();
        for (int t = 0; t < tree.horizon(); ++t) {
            const auto& kids = tree.children(node);
            const double draw = counter_uniform(seed, i, static_cast<std::uint64_t>(t));
            double cumulative = 0.0;
            std::size_t pick = kids.back();
            for (std::size_t c : kids) {
                cumulative += tree.node(c).cond_prob;
                if (draw < cumulative) {
                    pick = c;
                    break;
                }
            }
            node = pick;
        }
        const double delta = leaf_utility[node] - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (leaf_utility[node] - mean);
    }
    const double var = m2 / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

}  // namespace impactdp
