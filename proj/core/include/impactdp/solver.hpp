#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "impactdp/market.hpp"
#include "impactdp/scenario_tree.hpp"
#include "impactdp/strategy.hpp"
#include "impactdp/utility.hpp"

namespace impactdp {

/// Invalid solver configuration or an input the solver cannot run on.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value function produced a non-finite number.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// How continuation values of intermediate layers are obtained.
///  - interpolated: multilinear interpolation on per-node state grids.
///  - exact: recursive re-optimization at the exact visited state (no grids;
///    exponential in the horizon, meant for certification on small trees).
/// The liquidation layer (time T-1) is evaluated in closed form in both modes.
enum class ContinuationMode { interpolated, exact };

struct SolveConfig {
    int cash_points = 41;
    int spread_points = 21;
    int position_points = 21;
    int action_points = 201;
    double k0 = 1.0;
    double k_factor = 2.0;
    int max_k_expansions = 10;
    /// |position| bound of the state grids; defaults to k0 * T.
    std::optional<double> position_bound;
    /// Values closer than this count as ties (then smaller |h|, then h < 0 wins).
    double tie_tolerance = 0.0;
    /// Searched in addition to the uniform grid on [-K, K].
    std::vector<double> extra_actions;
    /// When set, exactly these actions are searched and no K search runs.
    std::optional<std::vector<double>> fixed_actions;
    ContinuationMode mode = ContinuationMode::interpolated;
    /// Worker threads; 0 defers to IMPACTDP_THREADS / hardware concurrency.
    int threads = 0;

    /// Throws ConfigError for counts < 2, k0 <= 0, k_factor <= 1, etc.
    void validate() const;
    double position_bound_for(int horizon) const { return position_bound.value_or(k0 * horizon); }
};

/// Value function of one node on a rectilinear (cash, spread, position) grid.
///
/// The cash axis is stored in mark-to-market form w = cash + P_node * position.
/// At fixed (spread, position) this is a shift of cash, so monotonicity along
/// w is monotonicity along cash. Interpolation is multilinear and clamps
/// outside the axes.
class ValueGrid {
public:
    ValueGrid(std::vector<double> cash_axis, std::vector<double> spread_axis,
              std::vector<double> position_axis, double mark_price);

    const std::vector<double>& cash_axis() const { return cash_; }
    const std::vector<double>& spread_axis() const { return spread_; }
    const std::vector<double>& position_axis() const { return position_; }
    double mark_price() const { return mark_price_; }
    std::size_t point_count() const { return values_.size(); }

    std::size_t flat_index(std::size_t i, std::size_t j, std::size_t k) const {
        return (k * spread_.size() + j) * cash_.size() + i;
    }
    double value(std::size_t i, std::size_t j, std::size_t k) const { return values_[flat_index(i, j, k)]; }
    double action(std::size_t i, std::size_t j, std::size_t k) const { return actions_[flat_index(i, j, k)]; }
    void set(std::size_t i, std::size_t j, std::size_t k, double value, double action);

    /// Raw-state coordinates of grid point (i, j, k).
    MarketState state_at(std::size_t i, std::size_t j, std::size_t k) const;
    double interpolate(const MarketState& state) const;

    /// Count of adjacent cash-axis pairs whose value drops by more than
    /// rel_tol * (1 + |value|).
    int monotonicity_violations(double rel_tol = 1e-12) const;

private:
    std::vector<double> cash_;
    std::vector<double> spread_;
    std::vector<double> position_;
    double mark_price_;
    std::vector<double> values_;
    std::vector<double> actions_;
};

struct SolveDiagnostics {
    long long k_expansions = 0;
    long long k_exhausted = 0;
    int monotonicity_violations = 0;
    std::size_t grid_points = 0;
};

struct SolveResult {
    /// Per node index; present for 1 <= time <= T-1 in interpolated mode.
    std::vector<std::optional<ValueGrid>> layers;
    double root_value = 0.0;
    double root_action = 0.0;
    double root_bound = 0.0;
    SolveDiagnostics diagnostics;
};

struct BoundSearch {
    double bound = 0.0;
    int expansions = 0;
    bool exhausted = false;
    /// (value at the lower end, value at the upper end) for each tested K.
    std::vector<std::pair<double, double>> boundary_values;
};

struct StepResult {
    double action = 0.0;
    double value = 0.0;
    BoundSearch search;
};

/// Continuation values for the one-step problems: what being at a node in a
/// given state is worth, under either continuation mode.
class Continuation {
public:
    Continuation(const ScenarioTree& tree, const Utility& u, double z, const SolveConfig& config,
                 const SolveResult* layers = nullptr);

    /// Value at `node` (time >= 1) in `state`, before the node's own trade.
    double value(std::size_t node, const MarketState& state) const;
    /// Sum over children c of p_c * value(c, state after `trade`).
    double expected_after(std::size_t node, const MarketState& state, double trade) const;
    /// Closed-form value of the forced liquidation at a time-(T-1) node.
    double liquidation_value(std::size_t node, const MarketState& state) const;
    /// Trades allowed at `node` from `state`: grid coverage of the position
    /// axis in interpolated mode, unbounded in exact mode.
    std::pair<double, double> admissible(const MarketState& state) const;

    const ScenarioTree& tree() const { return tree_; }
    const SolveConfig& config() const { return config_; }

private:
    const ScenarioTree& tree_;
    const Utility& u_;
    double z_;
    const SolveConfig& config_;
    const SolveResult* layers_;
};

/// Smallest K = k0 * k_factor^k (k <= max_k_expansions) with both end values
/// of [-K, K] (clipped to the admissible range) no better than trading zero.
BoundSearch action_bound_search(std::size_t node, const MarketState& state,
                                const Continuation& continuation, const SolveConfig& config);

/// Global grid search of the one-step problem at `node`. Time-(T-1) nodes
/// return the forced liquidation. Ties: smaller |h|, then negative h.
StepResult one_step_optimize(std::size_t node, const MarketState& state,
                             const Continuation& continuation, const SolveConfig& config);

/// Same search with the bound fixed to `bound` (no K search).
StepResult optimize_with_bound(std::size_t node, const MarketState& state,
                               const Continuation& continuation, const SolveConfig& config,
                               double bound);

/// Backward induction from the liquidation layer to the root state
/// (cash 0, spread zeta0, position 0). Leaves are worth u(cash + z - B).
/// Throws ConfigError for invalid trees/configs and NumericError for
/// non-finite values.
SolveResult backward_induce(const ScenarioTree& tree, const Utility& u, double z,
                            const SolveConfig& config);

/// Walks the tree forward with exact states, re-optimizing at each visited
/// state, and closes every path with the forced liquidation.
PredictableAssignment forward_extract(const ScenarioTree& tree, const SolveResult& solved,
                                      const Utility& u, double z, const SolveConfig& config);

/// E[u(z + xi_T - B)] computed leaf by leaf from the closed-form wealth.
/// Throws std::invalid_argument when the strategy does not liquidate.
double evaluate_strategy(const ScenarioTree& tree, const PredictableAssignment& strategy,
                         const Utility& u, double z);

}  // namespace impactdp
