#include "impactdp/strategy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace impactdp {

PredictableAssignment::PredictableAssignment(const ScenarioTree& tree)
    : tree_(&tree), trades_(tree.size()) {}

void PredictableAssignment::set(std::size_t node, double trade) {
    if (tree_->node(node).time >= tree_->horizon())
        throw std::invalid_argument("PredictableAssignment: nodes at time T carry no trade");
    trades_.at(node) = trade;
}

std::optional<double> PredictableAssignment::at(std::size_t node) const {
    return trades_.at(node);
}

bool PredictableAssignment::complete() const {
    for (std::size_t i = 0; i < trades_.size(); ++i)
        if (tree_->node(i).time < tree_->horizon() && !trades_[i]) return false;
    return true;
}

std::vector<double> PredictableAssignment::trades_along(std::size_t leaf) const {
    const auto nodes = tree_->ancestry(leaf);
    std::vector<double> out;
    out.reserve(nodes.size());
    for (std::size_t i : nodes) {
        if (tree_->node(i).time >= tree_->horizon()) continue;
        if (!trades_[i])
            throw std::invalid_argument("PredictableAssignment: no trade at node " +
                                        std::to_string(tree_->node(i).id));
        out.push_back(*trades_[i]);
    }
    return out;
}

bool PredictableAssignment::liquidating(double tolerance) const {
    for (std::size_t leaf : tree_->leaves()) {
        double position = 0.0;
        for (double h : trades_along(leaf)) position += h;
        if (!(std::abs(position) <= tolerance)) return false;
    }
    return true;
}

void force_liquidation(PredictableAssignment& strategy) {
    const ScenarioTree& tree = strategy.tree();
    const int T = tree.horizon();
    if (T < 1) return;
    for (std::size_t node : tree.nodes_at(T - 1)) {
        double position = 0.0;
        for (std::size_t i : tree.ancestry(node)) {
            if (i == node) break;
            const auto h = strategy.at(i);
            if (!h)
                throw std::invalid_argument("force_liquidation: trade missing at node " +
                                            std::to_string(tree.node(i).id));
            position += *h;
        }
        strategy.set(node, -position);
    }
}

}  // namespace impactdp
