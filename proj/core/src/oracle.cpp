#include "impactdp/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "impactdp/market.hpp"

namespace impactdp {
namespace {

/// Market data and trades along the current root -> node path, kept in the
/// layout PathView expects (depth[0] is a placeholder).
struct PathPrefix {
    double zeta0;
    std::vector<double> price;
    std::vector<double> resilience;
    std::vector<double> depth{0.0};
    std::vector<double> trades;

    PathView view() const { return {zeta0, price, resilience, depth}; }

    double position() const {
        double x = 0.0;
        for (double h : trades) x += h;
        return x;
    }
};

std::string format_estimate(double estimate) {
    std::ostringstream out;
    out.precision(4);
    out << estimate;
    return out.str();
}

class NestedSearch {
public:
    NestedSearch(const ScenarioTree& tree, const Utility& u, const std::vector<double>& order)
        : tree_(tree), u_(u), order_(order) {}

    /// Value of `node` given cash x and the prefix up to `node`. With a
    /// strategy, trades are read from it; without, the grid is maximized.
    double value(std::size_t node, double x, PathPrefix& prefix,
                 const PredictableAssignment* strategy) {
        const TreeNode& n = tree_.node(node);
        const int T = tree_.horizon();
        if (n.time == T) return u_(x - n.endowment.value_or(0.0));
        if (n.time == T - 1) return expected(node, x, prefix, -prefix.position(), strategy);
        if (strategy) return expected(node, x, prefix, *strategy->at(node), strategy);

        double best = 0.0;
        bool first = true;
        for (double h : order_) {
            const double v = expected(node, x, prefix, h, nullptr);
            if (first || v > best) best = v;
            first = false;
        }
        return best;
    }

    /// Sum over children of p_c * value(c) after trading h at `node`.
    double expected(std::size_t node, double x, PathPrefix& prefix, double h,
                    const PredictableAssignment* strategy) {
        ++evaluations;
        prefix.trades.push_back(h);
        prefix.resilience.push_back(tree_.node(node).resilience.value_or(0.0));
        double total = 0.0;
        for (std::size_t c : tree_.children(node)) {
            const TreeNode& child = tree_.node(c);
            prefix.price.push_back(child.price);
            prefix.depth.push_back(*child.depth);
            const double innovation = kappa(prefix.view(), prefix.trades);
            total += child.cond_prob * value(c, x + innovation, prefix, strategy);
            prefix.price.pop_back();
            prefix.depth.pop_back();
        }
        prefix.resilience.pop_back();
        prefix.trades.pop_back();
        return total;
    }

    /// Re-derives the maximizing trades along every path, ties in grid order.
    void extract(std::size_t node, double x, PathPrefix& prefix, PredictableAssignment& out) {
        const TreeNode& n = tree_.node(node);
        const int T = tree_.horizon();
        if (n.time == T) return;
        double h = -prefix.position();
        if (n.time < T - 1) {
            double best = 0.0;
            bool first = true;
            for (double candidate : order_) {
                const double v = expected(node, x, prefix, candidate, nullptr);
                if (first || v > best) {
                    best = v;
                    h = candidate;
                }
                first = false;
            }
        }
        out.set(node, h);
        prefix.trades.push_back(h);
        prefix.resilience.push_back(n.resilience.value_or(0.0));
        for (std::size_t c : tree_.children(node)) {
            const TreeNode& child = tree_.node(c);
            prefix.price.push_back(child.price);
            prefix.depth.push_back(*child.depth);
            extract(c, x + kappa(prefix.view(), prefix.trades), prefix, out);
            prefix.price.pop_back();
            prefix.depth.pop_back();
        }
        prefix.resilience.pop_back();
        prefix.trades.pop_back();
    }

    std::uint64_t evaluations = 0;

private:
    const ScenarioTree& tree_;
    const Utility& u_;
    const std::vector<double>& order_;
};

PathPrefix root_prefix(const ScenarioTree& tree) {
    PathPrefix prefix{tree.zeta0(), {tree.node(tree.root()).price}, {}, {0.0}, {}};
    return prefix;
}

void require_valid(const ScenarioTree& tree) {
    const ValidationReport report = validate(tree);
    if (!report.ok()) throw std::invalid_argument("invalid tree: " + report.violations.front().message);
}

std::vector<std::size_t> decision_nodes(const ScenarioTree& tree) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tree.size(); ++i)
        if (tree.node(i).time <= tree.horizon() - 2) out.push_back(i);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ActionGrid::ActionGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("action grid is empty");
    for (double v : values_)
        if (!std::isfinite(v)) throw std::invalid_argument("action grid has a non-finite value");
    std::sort(values_.begin(), values_.end());
    values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
    if (!std::binary_search(values_.begin(), values_.end(), 0.0))
        throw std::invalid_argument("action grid must contain 0");
}

ActionGrid ActionGrid::parse(std::string_view text) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = std::min(text.find(',', start), text.size());
        std::string_view item = text.substr(start, comma - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
            throw std::invalid_argument("action grid: cannot parse '" + std::string(item) + "'");
        values.push_back(v);
        start = comma + 1;
    }
    return ActionGrid(std::move(values));
}

std::vector<double> ActionGrid::tie_order() const {
    std::vector<double> out = values_;
    std::stable_sort(out.begin(), out.end(), [](double a, double b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        return a < b;
    });
    return out;
}

double enumeration_size(const ScenarioTree& tree, const ActionGrid& grid) {
    return std::pow(static_cast<double>(grid.size()), static_cast<double>(decision_nodes(tree).size()));
}

double history_size(const ScenarioTree& tree, const ActionGrid& grid) {
    const int T = tree.horizon();
    double total = 0.0;
    for (int t = 0; t <= T; ++t)
        total += static_cast<double>(tree.nodes_at(t).size()) *
                 std::pow(static_cast<double>(grid.size()), std::min(t, T - 1));
    return total;
}

void enumerate_strategies(const ScenarioTree& tree, const ActionGrid& grid,
                          const std::function<void(const PredictableAssignment&)>& visit,
                          const OracleLimits& limits) {
    if (tree.horizon() < 2) throw std::invalid_argument("enumerate_strategies: horizon must be >= 2");
    const double size = enumeration_size(tree, grid);
    if (size > limits.max_evaluations)
        throw CapacityError("enumeration needs " + format_estimate(size) + " strategies (cap " +
                                format_estimate(limits.max_evaluations) + ")",
                            size);

    const auto deciders = decision_nodes(tree);
    const auto order = grid.tie_order();
    std::vector<std::size_t> digits(deciders.size(), 0);
    PredictableAssignment strategy(tree);
    while (true) {
        for (std::size_t d = 0; d < deciders.size(); ++d) strategy.set(deciders[d], order[digits[d]]);
        force_liquidation(strategy);
        visit(strategy);

        // Odometer increment, least significant digit last.
        std::size_t d = deciders.size();
        while (d > 0) {
            --d;
            if (++digits[d] < order.size()) break;
            digits[d] = 0;
            if (d == 0) return;
        }
        if (deciders.empty()) return;
    }
}

double nested_expected_utility(const ScenarioTree& tree, const PredictableAssignment& strategy,
                               const Utility& u, double z) {
    if (!strategy.complete()) throw std::invalid_argument("nested_expected_utility: incomplete strategy");
    const std::vector<double> none;
    NestedSearch search(tree, u, none);
    PathPrefix prefix = root_prefix(tree);
    return search.value(tree.root(), z, prefix, &strategy);
}

OracleResult brute_force_solve(const ScenarioTree& tree, const Utility& u, double z,
                               const ActionGrid& grid, const OracleLimits& limits) {
    require_valid(tree);
    OracleResult result{"brute_force", 0.0, PredictableAssignment(tree), 0};
    bool first = true;
    const std::vector<double> none;
    NestedSearch search(tree, u, none);
    enumerate_strategies(
        tree, grid,
        [&](const PredictableAssignment& candidate) {
            PathPrefix prefix = root_prefix(tree);
            const double v = search.value(tree.root(), z, prefix, &candidate);
            ++result.evaluated;
            if (first || v > result.value) {
                result.value = v;
                result.strategy = candidate;
                first = false;
            }
        },
        limits);
    return result;
}

OracleResult history_dp(const ScenarioTree& tree, const Utility& u, double z,
                        const ActionGrid& grid, const OracleLimits& limits) {
    require_valid(tree);
    const double size = history_size(tree, grid);
    if (size > limits.max_evaluations)
        throw CapacityError("history recursion needs " + format_estimate(size) + " node histories (cap " +
                                format_estimate(limits.max_evaluations) + ")",
                            size);
    const auto order = grid.tie_order();
    NestedSearch search(tree, u, order);
    OracleResult result{"history_dp", 0.0, PredictableAssignment(tree), 0};
    PathPrefix prefix = root_prefix(tree);
    result.value = search.value(tree.root(), z, prefix, nullptr);
    result.evaluated = search.evaluations;
    PathPrefix again = root_prefix(tree);
    search.extract(tree.root(), z, again, result.strategy);
    return result;
}

}  // namespace impactdp
