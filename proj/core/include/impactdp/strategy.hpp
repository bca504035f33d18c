#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "impactdp/scenario_tree.hpp"

namespace impactdp {

/// Predictable trades on a tree: the value stored at a node of time t is the
/// trade H_{t+1}, decided with time-t information. Nodes of time T carry no
/// trade. Keying by the deciding node makes predictability structural.
class PredictableAssignment {
public:
    explicit PredictableAssignment(const ScenarioTree& tree);

    void set(std::size_t node, double trade);
    std::optional<double> at(std::size_t node) const;
    bool complete() const;

    /// h_1..h_T along root -> leaf. Throws if some deciding node is unset.
    std::vector<double> trades_along(std::size_t leaf) const;

    /// Sum of trades is zero (within `tolerance`) on every root -> leaf path.
    bool liquidating(double tolerance = 1e-12) const;

    const ScenarioTree& tree() const { return *tree_; }

private:
    const ScenarioTree* tree_;
    std::vector<std::optional<double>> trades_;
};

/// Sets the time-(T-1) trades to minus the accumulated position, so the
/// assignment liquidates by construction. Nodes of time <= T-2 must be set.
void force_liquidation(PredictableAssignment& strategy);

}  // namespace impactdp
