#include "impactdp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "impactdp/parallel.hpp"

namespace impactdp {
namespace {

double lerp(double a, double b, double w) { return a + w * (b - a); }

/// Locates x on a sorted axis: lower cell index and weight in [0, 1].
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double x) {
    if (axis.size() == 1 || x <= axis.front()) return {0, 0.0};
    if (x >= axis.back()) return {axis.size() - 2, 1.0};
    const auto upper = std::upper_bound(axis.begin(), axis.end(), x);
    const std::size_t i = static_cast<std::size_t>(upper - axis.begin()) - 1;
    return {i, (x - axis[i]) / (axis[i + 1] - axis[i])};
}

std::vector<double> make_axis(double lo, double hi, int count, bool include_zero) {
    if (!(hi > lo)) hi = lo + 1.0;
    std::vector<double> axis(count);
    for (int i = 0; i < count; ++i)
        axis[i] = i == count - 1 ? hi : lo + (hi - lo) * i / (count - 1);
    if (include_zero && lo < 0.0 && hi > 0.0 &&
        std::find(axis.begin(), axis.end(), 0.0) == axis.end()) {
        axis.insert(std::upper_bound(axis.begin(), axis.end(), 0.0), 0.0);
    }
    return axis;
}

bool tie_preferred(double candidate, double incumbent) {
    const double a = std::abs(candidate), b = std::abs(incumbent);
    if (a != b) return a < b;
    return candidate < incumbent;
}

struct AxisBounds {
    double cash_lo, cash_hi, spread_lo, spread_hi;
};

/// Box containing every state reachable at `node` when positions stay within
/// +-bound (so a single trade is at most 2 * bound, the first at most bound).
AxisBounds reachable_bounds(const ScenarioTree& tree, std::size_t node, double bound) {
    const auto path = tree.ancestry(node);
    double spread_lo = tree.zeta0(), spread_hi = tree.zeta0();
    double friction = 0.0, price_swing = 0.0;
    for (std::size_t s = 1; s < path.size(); ++s) {
        const TreeNode& prev = tree.node(path[s - 1]);
        const TreeNode& cur = tree.node(path[s]);
        const double decay = std::exp(-prev.resilience.value_or(0.0));
        const double max_trade = s == 1 ? bound : 2.0 * bound;
        spread_lo *= decay;
        spread_hi = decay * spread_hi + max_trade / cur.depth.value_or(1.0);
        friction += spread_hi * max_trade;
        if (s >= 2) price_swing += std::abs(cur.price - prev.price) * bound;
    }
    return {-price_swing - friction, price_swing, spread_lo, spread_hi};
}

void require_finite(double v, const char* where) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + where);
}

std::vector<double> candidate_actions(const MarketState& state, const Continuation& continuation,
                                      const SolveConfig& config, double bound) {
    auto [lo, hi] = continuation.admissible(state);
    std::vector<double> out;
    auto keep = [&](double h) {
        if (h >= lo && h <= hi) out.push_back(h);
    };
    if (config.fixed_actions) {
        for (double h : *config.fixed_actions) keep(h);
    } else {
        const double a = std::max(-bound, lo), b = std::min(bound, hi);
        const int n = config.action_points;
        for (int i = 0; i < n; ++i) keep(i == n - 1 ? b : a + (b - a) * i / (n - 1));
        for (double h : config.extra_actions) keep(h);
    }
    keep(0.0);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void SolveConfig::validate() const {
    if (cash_points < 2 || spread_points < 2 || position_points < 2)
        throw ConfigError("SolveConfig: every grid axis needs at least 2 points");
    if (action_points < 2) throw ConfigError("SolveConfig: need at least 2 actions");
    if (!(k0 > 0.0) || !std::isfinite(k0)) throw ConfigError("SolveConfig: k0 must be > 0");
    if (!(k_factor > 1.0) || !std::isfinite(k_factor))
        throw ConfigError("SolveConfig: k expansion factor must be > 1");
    if (max_k_expansions < 0) throw ConfigError("SolveConfig: max k expansions must be >= 0");
    if (position_bound && !(*position_bound > 0.0))
        throw ConfigError("SolveConfig: position bound must be > 0");
    if (!(tie_tolerance >= 0.0)) throw ConfigError("SolveConfig: tie tolerance must be >= 0");
    if (fixed_actions && fixed_actions->empty())
        throw ConfigError("SolveConfig: fixed action set is empty");
    for (double h : extra_actions)
        if (!std::isfinite(h)) throw ConfigError("SolveConfig: non-finite extra action");
    if (fixed_actions)
        for (double h : *fixed_actions)
            if (!std::isfinite(h)) throw ConfigError("SolveConfig: non-finite fixed action");
}

// ---------------------------------------------------------------------------

ValueGrid::ValueGrid(std::vector<double> cash_axis, std::vector<double> spread_axis,
                     std::vector<double> position_axis, double mark_price)
    : cash_(std::move(cash_axis)),
      spread_(std::move(spread_axis)),
      position_(std::move(position_axis)),
      mark_price_(mark_price),
      values_(cash_.size() * spread_.size() * position_.size(), 0.0),
      actions_(values_.size(), 0.0) {
    if (cash_.size() < 2 || spread_.size() < 2 || position_.size() < 2)
        throw ConfigError("ValueGrid: every axis needs at least 2 points");
}

void ValueGrid::set(std::size_t i, std::size_t j, std::size_t k, double value, double action) {
    const std::size_t idx = flat_index(i, j, k);
    values_[idx] = value;
    actions_[idx] = action;
}

MarketState ValueGrid::state_at(std::size_t i, std::size_t j, std::size_t k) const {
    const double x = position_[k];
    return {cash_[i] - mark_price_ * x, spread_[j], x};
}

double ValueGrid::interpolate(const MarketState& state) const {
    const auto [i, wi] = locate(cash_, state.cash + mark_price_ * state.position);
    const auto [j, wj] = locate(spread_, state.spread);
    const auto [k, wk] = locate(position_, state.position);
    auto plane = [&](std::size_t ii) {
        const double v00 = value(ii, j, k), v01 = value(ii, j, k + 1);
        const double v10 = value(ii, j + 1, k), v11 = value(ii, j + 1, k + 1);
        return lerp(lerp(v00, v01, wk), lerp(v10, v11, wk), wj);
    };
    return lerp(plane(i), plane(i + 1), wi);
}

int ValueGrid::monotonicity_violations(double rel_tol) const {
    int count = 0;
    for (std::size_t k = 0; k < position_.size(); ++k)
        for (std::size_t j = 0; j < spread_.size(); ++j)
            for (std::size_t i = 0; i + 1 < cash_.size(); ++i) {
                const double a = value(i, j, k), b = value(i + 1, j, k);
                if (b < a - rel_tol * (1.0 + std::abs(a))) ++count;
            }
    return count;
}

// ---------------------------------------------------------------------------

Continuation::Continuation(const ScenarioTree& tree, const Utility& u, double z,
                           const SolveConfig& config, const SolveResult* layers)
    : tree_(tree), u_(u), z_(z), config_(config), layers_(layers) {}

double Continuation::liquidation_value(std::size_t node, const MarketState& state) const {
    const TreeNode& n = tree_.node(node);
    const double r = n.resilience.value_or(0.0);
    double total = 0.0;
    for (std::size_t c : tree_.children(node)) {
        const TreeNode& child = tree_.node(c);
        const MarketState next = advance(state, r, *child.depth, child.price, -state.position);
        total += child.cond_prob * u_(next.cash + z_ - child.endowment.value_or(0.0));
    }
    return total;
}

double Continuation::value(std::size_t node, const MarketState& state) const {
    const TreeNode& n = tree_.node(node);
    const int T = tree_.horizon();
    if (n.time == T) return u_(state.cash + z_ - n.endowment.value_or(0.0));
    if (n.time == T - 1) return liquidation_value(node, state);
    if (config_.mode == ContinuationMode::interpolated && layers_ && layers_->layers[node])
        return layers_->layers[node]->interpolate(state);
    return one_step_optimize(node, state, *this, config_).value;
}

double Continuation::expected_after(std::size_t node, const MarketState& state, double trade) const {
    const double r = tree_.node(node).resilience.value_or(0.0);
    double total = 0.0;
    for (std::size_t c : tree_.children(node)) {
        const TreeNode& child = tree_.node(c);
        total += child.cond_prob * value(c, advance(state, r, *child.depth, child.price, trade));
    }
    return total;
}

std::pair<double, double> Continuation::admissible(const MarketState& state) const {
    if (config_.mode == ContinuationMode::exact) return {-HUGE_VAL, HUGE_VAL};
    const double bound = config_.position_bound_for(tree_.horizon());
    return {std::min(0.0, -bound - state.position), std::max(0.0, bound - state.position)};
}

// ---------------------------------------------------------------------------

BoundSearch action_bound_search(std::size_t node, const MarketState& state,
                                const Continuation& continuation, const SolveConfig& config) {
    BoundSearch out;
    const auto [lo, hi] = continuation.admissible(state);
    const double at_zero = continuation.expected_after(node, state, 0.0);
    double bound = config.k0;
    for (int k = 0; k <= config.max_k_expansions; ++k, bound *= config.k_factor) {
        const double a = std::max(-bound, lo), b = std::min(bound, hi);
        const double va = continuation.expected_after(node, state, a);
        const double vb = continuation.expected_after(node, state, b);
        out.boundary_values.emplace_back(va, vb);
        out.bound = bound;
        out.expansions = k;
        const bool lower_done = va <= at_zero || a > -bound;
        const bool upper_done = vb <= at_zero || b < bound;
        if (lower_done && upper_done) return out;
    }
    out.exhausted = true;
    return out;
}

StepResult optimize_with_bound(std::size_t node, const MarketState& state,
                               const Continuation& continuation, const SolveConfig& config,
                               double bound) {
    StepResult best;
    best.search.bound = bound;
    const ScenarioTree& tree = continuation.tree();
    if (tree.node(node).time == tree.horizon() - 1) {
        best.action = -state.position;
        best.value = continuation.liquidation_value(node, state);
        return best;
    }
    const auto candidates = candidate_actions(state, continuation, config, bound);
    std::vector<double> values(candidates.size());
    double top = -HUGE_VAL;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        values[c] = continuation.expected_after(node, state, candidates[c]);
        top = std::max(top, values[c]);
    }
    bool found = false;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (!(values[c] >= top - config.tie_tolerance)) continue;
        if (!found || tie_preferred(candidates[c], best.action)) {
            best.action = candidates[c];
            best.value = values[c];
            found = true;
        }
    }
    if (!found) throw NumericError("one-step problem has no finite candidate value");
    return best;
}

StepResult one_step_optimize(std::size_t node, const MarketState& state,
                             const Continuation& continuation, const SolveConfig& config) {
    const ScenarioTree& tree = continuation.tree();
    if (tree.node(node).time == tree.horizon() - 1 || config.fixed_actions)
        return optimize_with_bound(node, state, continuation, config, 0.0);
    BoundSearch search = action_bound_search(node, state, continuation, config);
    StepResult result = optimize_with_bound(node, state, continuation, config, search.bound);
    result.search = std::move(search);
    return result;
}

// ---------------------------------------------------------------------------

SolveResult backward_induce(const ScenarioTree& tree, const Utility& u, double z,
                            const SolveConfig& config) {
    config.validate();
    const ValidationReport report = validate(tree);
    if (!report.ok())
        throw ConfigError("invalid tree: " + report.violations.front().message);
    if (!std::isfinite(z)) throw ConfigError("initial capital z must be finite");

    const int T = tree.horizon();
    SolveResult result;
    result.layers.resize(tree.size());
    const Continuation continuation(tree, u, z, config, &result);
    const int threads = resolve_thread_count(config.threads);
    const double bound = config.position_bound_for(T);

    if (config.mode == ContinuationMode::interpolated) {
        for (int t = T - 1; t >= 1; --t) {
            for (std::size_t node : tree.nodes_at(t)) {
                const AxisBounds box = reachable_bounds(tree, node, bound);
                ValueGrid grid(make_axis(box.cash_lo, box.cash_hi, config.cash_points, true),
                               make_axis(box.spread_lo, box.spread_hi, config.spread_points, false),
                               make_axis(-bound, bound, config.position_points, true),
                               tree.node(node).price);
                const std::size_t ni = grid.cash_axis().size();
                const std::size_t nj = grid.spread_axis().size();
                const std::size_t nk = grid.position_axis().size();
                std::vector<long long> expansions(nj * nk, 0), exhausted(nj * nk, 0);

                parallel_for(nj * nk, threads, [&](std::size_t column) {
                    const std::size_t j = column % nj, k = column / nj;
                    if (t == T - 1) {
                        for (std::size_t i = 0; i < ni; ++i) {
                            const MarketState s = grid.state_at(i, j, k);
                            grid.set(i, j, k, continuation.liquidation_value(node, s), -s.position);
                        }
                        return;
                    }
                    // One K per (spread, position) column keeps the candidate
                    // set independent of cash, so values stay monotone in cash.
                    double column_bound = 0.0;
                    if (!config.fixed_actions) {
                        for (std::size_t i = 0; i < ni; ++i) {
                            const BoundSearch search =
                                action_bound_search(node, grid.state_at(i, j, k), continuation, config);
                            column_bound = std::max(column_bound, search.bound);
                            expansions[column] += search.expansions;
                            exhausted[column] += search.exhausted ? 1 : 0;
                        }
                    }
                    for (std::size_t i = 0; i < ni; ++i) {
                        const StepResult step = optimize_with_bound(node, grid.state_at(i, j, k),
                                                                    continuation, config, column_bound);
                        grid.set(i, j, k, step.value, step.action);
                    }
                });

                for (std::size_t c = 0; c < nj * nk; ++c) {
                    result.diagnostics.k_expansions += expansions[c];
                    result.diagnostics.k_exhausted += exhausted[c];
                }
                for (std::size_t i = 0; i < ni; ++i)
                    for (std::size_t j = 0; j < nj; ++j)
                        for (std::size_t k = 0; k < nk; ++k) require_finite(grid.value(i, j, k), "value grid");
                result.diagnostics.monotonicity_violations += grid.monotonicity_violations();
                result.diagnostics.grid_points += grid.point_count();
                result.layers[node] = std::move(grid);
            }
        }
    }

    const MarketState start{0.0, tree.zeta0(), 0.0};
    const StepResult root = one_step_optimize(tree.root(), start, continuation, config);
    require_finite(root.value, "root value");
    result.root_value = root.value;
    result.root_action = root.action;
    result.root_bound = root.search.bound;
    result.diagnostics.k_expansions += root.search.expansions;
    result.diagnostics.k_exhausted += root.search.exhausted ? 1 : 0;
    return result;
}

namespace {

void extract_from(std::size_t node, const MarketState& state, const Continuation& continuation,
                  const SolveConfig& config, PredictableAssignment& out) {
    const ScenarioTree& tree = continuation.tree();
    const TreeNode& n = tree.node(node);
    if (n.time == tree.horizon()) return;
    const double trade = n.time == tree.horizon() - 1
                             ? -state.position
                             : one_step_optimize(node, state, continuation, config).action;
    out.set(node, trade);
    const double r = n.resilience.value_or(0.0);
    for (std::size_t c : tree.children(node)) {
        const TreeNode& child = tree.node(c);
        extract_from(c, advance(state, r, *child.depth, child.price, trade), continuation, config, out);
    }
}

}  // namespace

PredictableAssignment forward_extract(const ScenarioTree& tree, const SolveResult& solved,
                                      const Utility& u, double z, const SolveConfig& config) {
    const Continuation continuation(tree, u, z, config, &solved);
    PredictableAssignment out(tree);
    extract_from(tree.root(), MarketState{0.0, tree.zeta0(), 0.0}, continuation, config, out);
    return out;
}

double evaluate_strategy(const ScenarioTree& tree, const PredictableAssignment& strategy,
                         const Utility& u, double z) {
    if (!strategy.complete() || !strategy.liquidating())
        throw std::invalid_argument("evaluate_strategy: strategy does not liquidate on every path");
    // Summed as offsets from the first leaf so a constant payoff is exact.
    std::optional<double> base;
    double offset = 0.0;
    for (std::size_t leaf : tree.leaves()) {
        const LeafPath path = extract_path(tree, leaf);
        const auto trades = strategy.trades_along(leaf);
        const double value = u(z + terminal_wealth_explicit(path.market, trades) - path.endowment);
        if (!base) base = value;
        offset += path.probability * (value - *base);
    }
    return *base + offset;
}

}  // namespace impactdp
