#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "impactdp/scenario_tree.hpp"
#include "impactdp/strategy.hpp"
#include "impactdp/utility.hpp"

namespace impactdp {

/// Finite, sorted set of candidate trade sizes that always contains 0.
class ActionGrid {
public:
    /// Throws std::invalid_argument when empty, non-finite or missing 0.
    explicit ActionGrid(std::vector<double> values);
    /// Comma separated values, e.g. "-1,-0.5,0,0.5,1".
    static ActionGrid parse(std::string_view text);

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    /// Values ordered by |h| ascending, negative first: the tie-break order.
    std::vector<double> tie_order() const;

private:
    std::vector<double> values_;
};

/// Thrown when an exhaustive search would exceed the configured cap.
class CapacityError : public std::runtime_error {
public:
    CapacityError(const std::string& what, double estimate)
        : std::runtime_error(what), estimate_(estimate) {}
    double estimate() const { return estimate_; }

private:
    double estimate_;
};

struct OracleLimits {
    double max_evaluations = 1e7;
};

struct OracleResult {
    std::string method;
    double value = 0.0;
    PredictableAssignment strategy;
    std::uint64_t evaluated = 0;
};

/// Number of grid strategies: |grid|^(number of nodes with time <= T-2).
double enumeration_size(const ScenarioTree& tree, const ActionGrid& grid);
/// Number of (node, history) pairs visited by history_dp.
double history_size(const ScenarioTree& tree, const ActionGrid& grid);

/// Calls `visit` once per assignment of grid values to the nodes of time
/// <= T-2, with time-(T-1) trades forced to liquidate. The first node in
/// topological order is the most significant digit; digits run in tie order.
/// Throws CapacityError before visiting anything when over the cap.
void enumerate_strategies(const ScenarioTree& tree, const ActionGrid& grid,
                          const std::function<void(const PredictableAssignment&)>& visit,
                          const OracleLimits& limits = {});

/// E[u(z + xi_T - B)] as nested conditional expectations, accumulating cash
/// innovations kappa_t along each path. Mathematically equal to
/// evaluate_strategy; shares its floating-point evaluation order with
/// history_dp so the two oracles can be compared exactly.
double nested_expected_utility(const ScenarioTree& tree, const PredictableAssignment& strategy,
                               const Utility& u, double z);

/// Maximum of nested_expected_utility over every enumerated strategy. Ties
/// keep the first strategy in enumeration order.
OracleResult brute_force_solve(const ScenarioTree& tree, const Utility& u, double z,
                               const ActionGrid& grid, const OracleLimits& limits = {});

/// Backward induction over full trade histories (cash, h_1, ..., h_t) with
/// actions restricted to the grid. Same search space as brute_force_solve.
OracleResult history_dp(const ScenarioTree& tree, const Utility& u, double z,
                        const ActionGrid& grid, const OracleLimits& limits = {});

}  // namespace impactdp
