#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "impactdp/scenario_tree.hpp"
#include "impactdp/strategy.hpp"
#include "reference.hpp"

using namespace impactdp;

namespace {

GeneratorSpec binomial_spec(int T, double p = 0.5) {
    GeneratorSpec s;
    s.kind = TreeKind::binomial;
    s.horizon = T;
    s.step = 1.0;
    s.up_probability = p;
    s.resilience = {0.2};
    s.depth = {2.0};
    return s;
}

const char* kSmallTree = R"({
  "T": 2, "zeta0": 0.1,
  "nodes": [
    {"id": 10, "parent": null, "t": 0, "p": 1, "P": 5, "r": 0.1},
    {"id": 11, "parent": 10, "t": 1, "p": 1, "P": 6, "r": 0.2, "delta": 2},
    {"id": 12, "parent": 11, "t": 2, "p": 0.5, "P": 7, "delta": 3, "B": 1},
    {"id": 13, "parent": 11, "t": 2, "p": 0.5, "P": 5, "delta": 4, "B": -1}
  ]
})";

}  // namespace

TEST(Validate, WellFormedBinomialIsClean) {
    EXPECT_TRUE(validate(generate(binomial_spec(2))).ok());
}

TEST(Validate, ProbabilitySumViolation) {
    std::vector<TreeNode> nodes{
        {0, std::nullopt, 0, 1.0, 0.0, 0.0, std::nullopt, std::nullopt},
        {1, 0, 1, 0.5, 0.0, 0.0, 1.0, std::nullopt},
        {2, 0, 1, 0.6, 0.0, 0.0, 1.0, std::nullopt},
        {3, 1, 2, 1.0, 0.0, std::nullopt, 1.0, 0.0},
        {4, 2, 2, 1.0, 0.0, std::nullopt, 1.0, 0.0},
    };
    const ValidationReport r = validate(ScenarioTree(2, 0.0, nodes));
    EXPECT_TRUE(r.has(ViolationKind::probability_sum));
}

TEST(Validate, ZeroDepthViolation) {
    std::vector<TreeNode> nodes{
        {0, std::nullopt, 0, 1.0, 0.0, 0.0, std::nullopt, std::nullopt},
        {1, 0, 1, 1.0, 0.0, 0.0, 0.0, std::nullopt},
        {2, 1, 2, 1.0, 0.0, std::nullopt, 1.0, 0.0},
    };
    const ValidationReport r = validate(ScenarioTree(2, 0.0, nodes, 0.5));
    EXPECT_TRUE(r.has(ViolationKind::depth_bound));
    EXPECT_EQ(to_string(ViolationKind::depth_bound), "depth-bound");
}

TEST(Validate, DepthBelowOverride) {
    const ScenarioTree t = generate(binomial_spec(2));
    GeneratorSpec s = binomial_spec(2);
    s.delta_min = 3.0;
    EXPECT_DOUBLE_EQ(t.delta_min(), 2.0);
    EXPECT_TRUE(validate(generate(s)).has(ViolationKind::depth_bound));
}

TEST(Validate, MissingFieldsNegativeValuesAndShortHorizon) {
    std::vector<TreeNode> nodes{
        {0, std::nullopt, 0, 1.0, 0.0, -0.1, std::nullopt, std::nullopt},
        {1, 0, 1, 1.0, 0.0, std::nullopt, std::nullopt, std::nullopt},
    };
    const ValidationReport r = validate(ScenarioTree(1, -1.0, nodes, 1.0));
    EXPECT_TRUE(r.has(ViolationKind::horizon_too_short));
    EXPECT_TRUE(r.has(ViolationKind::negative_zeta0));
    EXPECT_TRUE(r.has(ViolationKind::negative_resilience));
    EXPECT_TRUE(r.has(ViolationKind::missing_field));
}

TEST(Validate, MissingChildren) {
    std::vector<TreeNode> nodes{
        {0, std::nullopt, 0, 1.0, 0.0, 0.0, std::nullopt, std::nullopt},
        {1, 0, 1, 1.0, 0.0, 0.0, 1.0, std::nullopt},
    };
    EXPECT_TRUE(validate(ScenarioTree(2, 0.0, nodes)).has(ViolationKind::missing_children));
}

TEST(ScenarioTree, RejectsStructuralDefects) {
    const TreeNode root{0, std::nullopt, 0, 1.0, 0.0, 0.0, std::nullopt, std::nullopt};
    EXPECT_THROW(ScenarioTree(2, 0.0, {root, {0, 0, 1, 1.0, 0.0, 0.0, 1.0, std::nullopt}}),
                 std::invalid_argument);  // duplicate id
    EXPECT_THROW(ScenarioTree(2, 0.0, {root, {1, 5, 1, 1.0, 0.0, 0.0, 1.0, std::nullopt}}),
                 std::invalid_argument);  // unknown parent
    EXPECT_THROW(ScenarioTree(2, 0.0, {root, {1, 0, 2, 1.0, 0.0, 0.0, 1.0, std::nullopt}}),
                 std::invalid_argument);  // wrong child time
    EXPECT_THROW(ScenarioTree(2, 0.0, {root, {1, std::nullopt, 0, 1.0, 0.0, 0.0, 1.0, std::nullopt}}),
                 std::invalid_argument);  // second root
}

TEST(ConditionalExpectation, ConstantLeaves) {
    const ScenarioTree t = generate(binomial_spec(3, 0.3));
    std::unordered_map<NodeId, double> values;
    for (std::size_t leaf : t.leaves()) values[t.node(leaf).id] = 2.5;
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(conditional_expectation(t, i, values), 2.5, 1e-14);
}

TEST(ConditionalExpectation, TwoLeafAverage) {
    const ScenarioTree t = generate(binomial_spec(2));
    const std::size_t node = t.nodes_at(1).front();
    const auto kids = t.children(node);
    std::unordered_map<NodeId, double> values;
    for (std::size_t leaf : t.leaves()) values[t.node(leaf).id] = 0.0;
    values[t.node(kids[0]).id] = 1.0;
    values[t.node(kids[1]).id] = 3.0;
    EXPECT_DOUBLE_EQ(conditional_expectation(t, node, values), 2.0);
}

TEST(ConditionalExpectation, MissingLeafThrows) {
    const ScenarioTree t = generate(binomial_spec(2));
    std::unordered_map<NodeId, double> values;
    values[t.node(t.leaves().front()).id] = 1.0;
    EXPECT_THROW(conditional_expectation(t, t.root(), values), std::invalid_argument);
}

TEST(ConditionalExpectationProperty, TowerAndLeafIdentity) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const ScenarioTree t = impactdp::testing::random_tree(rng, 3, 2 + trial % 2);
        std::unordered_map<NodeId, double> leaf_values;
        for (std::size_t leaf : t.leaves()) leaf_values[t.node(leaf).id] = d(rng);
        for (std::size_t leaf : t.leaves())
            ASSERT_EQ(conditional_expectation(t, leaf, leaf_values), leaf_values[t.node(leaf).id]);

        for (int s = 1; s <= 2; ++s) {
            // E_0[X] = E_0[E_s[X]]: treat time-s conditional values as a
            // function on leaves that is constant below each time-s node.
            std::unordered_map<NodeId, double> lifted;
            for (std::size_t leaf : t.leaves())
                lifted[t.node(leaf).id] = conditional_expectation(t, t.ancestor_at(leaf, s), leaf_values);
            ASSERT_NEAR(conditional_expectation(t, t.root(), lifted),
                        conditional_expectation(t, t.root(), leaf_values), 1e-12);
        }
    }
}

TEST(ExtractPath, DeterministicTree) {
    const ScenarioTree t = generate(preset("det-example"));
    ASSERT_EQ(t.leaves().size(), 1u);
    const LeafPath p = extract_path(t, t.leaves().front());
    EXPECT_EQ(p.market.price(2), 1.0);
    EXPECT_EQ(p.market.price(1), 0.0);
    EXPECT_EQ(p.probability, 1.0);
    EXPECT_EQ(p.nodes.size(), 3u);
}

TEST(ExtractPath, BinomialUpUp) {
    GeneratorSpec s = binomial_spec(2);
    s.initial_price = 10.0;
    const ScenarioTree t = generate(s);
    const LeafPath p = extract_path(t, t.leaves().front());
    EXPECT_EQ(p.market.price(0), 10.0);
    EXPECT_EQ(p.market.price(1), 11.0);
    EXPECT_EQ(p.market.price(2), 12.0);
}

TEST(ExtractPath, RejectsNonLeaf) {
    const ScenarioTree t = generate(binomial_spec(2));
    EXPECT_THROW(extract_path(t, t.root()), std::invalid_argument);
}

TEST(Generate, BinomialCountsAndWeights) {
    const ScenarioTree t = generate(binomial_spec(2));
    EXPECT_EQ(t.size(), 7u);
    for (std::size_t leaf : t.leaves()) EXPECT_DOUBLE_EQ(t.path_probability(leaf), 0.25);
}

TEST(Generate, DeterministicSinglePath) {
    const ScenarioTree t = generate(preset("det-example"));
    EXPECT_EQ(t.size(), 3u);
    for (int time = 0; time <= 2; ++time) EXPECT_EQ(t.nodes_at(time).size(), 1u);
}

TEST(Generate, TrinomialCounts) {
    GeneratorSpec s = binomial_spec(3, 0.25);
    s.kind = TreeKind::trinomial;
    const ScenarioTree t = generate(s);
    EXPECT_EQ(t.leaves().size(), 27u);
    EXPECT_TRUE(validate(t).ok());
}

TEST(Generate, NotconvexPreset) {
    const ScenarioTree t = generate(preset("notconvex"));
    EXPECT_EQ(t.horizon(), 3);
    EXPECT_EQ(t.zeta0(), 0.0);
    EXPECT_EQ(t.leaves().size(), 27u);
    EXPECT_TRUE(validate(t).ok());
    const LeafPath p = extract_path(t, t.leaves().back());
    EXPECT_EQ(p.market.depth(1), 1.0);
    EXPECT_EQ(p.market.depth(2), 10.0);
    EXPECT_EQ(p.market.depth(3), 10.0);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(p.market.resilience(i), 0.0);
}

TEST(Generate, RejectsBadParameters) {
    GeneratorSpec s = binomial_spec(2, 1.5);
    EXPECT_THROW(generate(s), std::invalid_argument);
    s = binomial_spec(2);
    s.depth = {1.0, 2.0, 3.0};  // neither 1 nor T entries
    EXPECT_THROW(generate(s), std::invalid_argument);
    EXPECT_THROW(preset("nope"), std::invalid_argument);
}

TEST(GenerateProperty, PresetsValidateAndLeafProbabilitiesSumToOne) {
    for (const auto& name : preset_names()) {
        const ScenarioTree t = generate(preset(name));
        EXPECT_TRUE(validate(t).ok()) << name;
        double total = 0.0;
        for (std::size_t leaf : t.leaves()) total += t.path_probability(leaf);
        EXPECT_NEAR(total, 1.0, 1e-9) << name;
    }
}

TEST(GaussHermite, MatchesNormalMoments) {
    for (int k : {1, 2, 3, 5, 8}) {
        const Quadrature q = gauss_hermite(k);
        double m0 = 0, m1 = 0, m2 = 0, m4 = 0;
        for (int i = 0; i < k; ++i) {
            const double x = q.nodes[i], w = q.weights[i];
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
            m4 += w * x * x * x * x;
        }
        EXPECT_NEAR(m0, 1.0, 1e-13);
        EXPECT_NEAR(m1, 0.0, 1e-13);
        if (k >= 2) EXPECT_NEAR(m2, 1.0, 1e-12);
        if (k >= 3) EXPECT_NEAR(m4, 3.0, 1e-11);
    }
    const Quadrature q3 = gauss_hermite(3);
    EXPECT_NEAR(q3.nodes[0], -std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(q3.weights[1], 2.0 / 3.0, 1e-12);
}

TEST(MonotoneCondition, NotconvexFails) {
    const MonotoneReport r = monotone_condition_check(generate(preset("notconvex")));
    EXPECT_FALSE(r.holds);
    ASSERT_FALSE(r.paths.empty());
    EXPECT_EQ(r.paths.front().sequence, (std::vector<double>{1.0, 10.0, 10.0}));
    EXPECT_EQ(r.paths.front().first_violation, 2);
}

TEST(MonotoneCondition, ResilientConstantDepthHolds) {
    const ScenarioTree t = generate(preset("resilient"));
    const MonotoneReport r = monotone_condition_check(t);
    EXPECT_TRUE(r.holds);
    for (int s = 1; s <= 3; ++s) EXPECT_NEAR(r.paths.front().sequence[s - 1], std::exp(-1.0 * s), 1e-15);
}

TEST(MonotoneCondition, ZeroResilienceConstantDepthFails) {
    GeneratorSpec s = binomial_spec(3);
    s.resilience = {0.0};
    const MonotoneReport r = monotone_condition_check(generate(s));
    EXPECT_FALSE(r.holds);
}

TEST(TreeJson, LoadsAndRoundTrips) {
    const ScenarioTree t = load_tree_json(kSmallTree);
    EXPECT_EQ(t.horizon(), 2);
    EXPECT_EQ(t.node(t.index_of(13)).endowment, -1.0);
    EXPECT_TRUE(validate(t).ok());
    const std::string dumped = dump_tree_json(t);
    EXPECT_EQ(dump_tree_json(load_tree_json(dumped)), dumped);

    const ScenarioTree g = generate(preset("binomial"));
    EXPECT_EQ(dump_tree_json(load_tree_json(dump_tree_json(g))), dump_tree_json(g));
}

TEST(TreeJson, RejectsMalformedInput) {
    EXPECT_THROW(load_tree_json("{"), std::invalid_argument);
    EXPECT_THROW(load_tree_json(R"({"T": 2, "zeta0": 0, "nodes": [], "extra": 1})"), std::invalid_argument);
    EXPECT_THROW(load_tree_json(R"({"T": 2.5, "zeta0": 0, "nodes": []})"), std::invalid_argument);
    EXPECT_THROW(load_tree_json(R"({"T": 2, "zeta0": 0, "nodes": [
        {"id": 0, "parent": null, "t": 0, "p": 1, "P": 0, "r": 0, "colour": 1}]})"),
                 std::invalid_argument);
    EXPECT_THROW(load_tree_json(R"({"T": 2, "zeta0": 0, "nodes": [
        {"id": 0, "parent": null, "t": 0, "p": 1, "P": 0, "r": 0},
        {"id": 2, "parent": 1, "t": 2, "p": 1, "P": 0, "delta": 1, "B": 0},
        {"id": 1, "parent": 0, "t": 1, "p": 1, "P": 0, "r": 0, "delta": 1}]})"),
                 std::invalid_argument);  // forward reference
    EXPECT_THROW(load_tree_json(R"({"T": 2, "zeta0": 0, "nodes": [
        {"id": 0, "parent": null, "t": 0, "p": "1", "P": 0, "r": 0}]})"),
                 std::invalid_argument);
    EXPECT_THROW(load_tree_file("/nonexistent/tree.json"), std::invalid_argument);
}

TEST(PredictableAssignment, SetAndRead) {
    const ScenarioTree t = generate(binomial_spec(2));
    PredictableAssignment s(t);
    EXPECT_FALSE(s.complete());
    EXPECT_THROW(s.set(t.leaves().front(), 1.0), std::invalid_argument);
    s.set(t.root(), 1.0);
    for (std::size_t i : t.nodes_at(1)) s.set(i, -1.0);
    EXPECT_TRUE(s.complete());
    EXPECT_TRUE(s.liquidating());
    EXPECT_EQ(s.trades_along(t.leaves().front()), (std::vector<double>{1.0, -1.0}));
    s.set(t.nodes_at(1).front(), -0.5);
    EXPECT_FALSE(s.liquidating());
}

TEST(PredictableAssignmentProperty, ForcedTradeSharedAcrossSiblings) {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        const ScenarioTree t = impactdp::testing::random_tree(rng, 4, 2);
        PredictableAssignment s(t);
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t.node(i).time <= t.horizon() - 2) s.set(i, d(rng));
        force_liquidation(s);
        ASSERT_TRUE(s.liquidating());
        // Every leaf path reads one trade per deciding ancestor, so the trade
        // H_t is a function of the time-(t-1) node.
        for (std::size_t leaf : t.leaves()) {
            const auto h = s.trades_along(leaf);
            for (int time = 0; time < t.horizon(); ++time)
                ASSERT_EQ(h[time], *s.at(t.ancestor_at(leaf, time)));
        }
        for (std::size_t n : t.nodes_at(t.horizon() - 2)) {
            const auto kids = t.children(n);
            for (std::size_t c : kids) ASSERT_EQ(*s.at(c), *s.at(kids.front()));
        }
    }
}
