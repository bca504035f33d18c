#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "impactdp/market.hpp"

namespace impactdp {

using NodeId = std::int64_t;

/// One node of the event tree. `cond_prob` is the probability of reaching
/// this node from its parent. `resilience` is required for time <= T-1,
/// `depth` for time >= 1 and `endowment` (B) for time == T.
struct TreeNode {
    NodeId id = 0;
    std::optional<NodeId> parent;
    int time = 0;
    double cond_prob = 1.0;
    double price = 0.0;
    std::optional<double> resilience;
    std::optional<double> depth;
    std::optional<double> endowment;
};

enum class ViolationKind {
    horizon_too_short,
    negative_zeta0,
    root,
    probability_sum,
    probability_range,
    missing_field,
    negative_resilience,
    depth_bound,
    leaf_time,
    missing_children,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::optional<NodeId> node;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool has(ViolationKind kind) const;
};

/// Finite filtered probability space as an event tree.
///
/// Nodes are kept in topological order (parents before children). Node
/// indices (`std::size_t`) are positions in that order; `NodeId`s are the
/// external identifiers used in files and reports. Construction rejects
/// structural defects that make the tree unusable (duplicate ids, unknown or
/// forward parent references, multiple roots, wrong child times). Content
/// defects (probabilities, missing fields, depth bound) are left to validate().
class ScenarioTree {
public:
    ScenarioTree(int horizon, double zeta0, std::vector<TreeNode> nodes,
                 std::optional<double> delta_min = std::nullopt);

    int horizon() const { return horizon_; }
    double zeta0() const { return zeta0_; }
    /// Lower bound on depth: the override passed at construction, otherwise
    /// the smallest depth present in the tree.
    double delta_min() const { return delta_min_; }

    std::size_t size() const { return nodes_.size(); }
    const TreeNode& node(std::size_t index) const { return nodes_.at(index); }
    std::span<const TreeNode> nodes() const { return nodes_; }
    std::size_t root() const { return 0; }
    std::optional<std::size_t> parent(std::size_t index) const;
    std::span<const std::size_t> children(std::size_t index) const;
    std::size_t index_of(NodeId id) const;

    const std::vector<std::size_t>& nodes_at(int time) const;
    const std::vector<std::size_t>& leaves() const { return nodes_at(horizon_); }

    /// Product of conditional probabilities from the root.
    double path_probability(std::size_t index) const { return path_prob_[index]; }
    /// Root-to-node index sequence (inclusive).
    std::vector<std::size_t> ancestry(std::size_t index) const;
    /// Ancestor of `index` at `time` (index itself when times agree).
    std::size_t ancestor_at(std::size_t index, int time) const;

private:
    int horizon_;
    double zeta0_;
    double delta_min_;
    std::vector<TreeNode> nodes_;
    std::vector<std::optional<std::size_t>> parent_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::vector<std::size_t>> by_time_;
    std::vector<double> path_prob_;
    std::unordered_map<NodeId, std::size_t> index_;
};

ValidationReport validate(const ScenarioTree& tree);

/// Probability-weighted average of `leaf_values` over the leaves below
/// `node`, using conditional probabilities along each path. Throws
/// std::invalid_argument when a descendant leaf has no value.
double conditional_expectation(const ScenarioTree& tree, std::size_t node,
                               const std::unordered_map<NodeId, double>& leaf_values);

struct LeafPath {
    MarketPath market;
    double endowment;
    double probability;
    std::vector<std::size_t> nodes;  // root..leaf
};

/// Market data along root -> leaf. Throws std::invalid_argument for a non-leaf
/// or when a field needed by MarketPath is missing.
LeafPath extract_path(const ScenarioTree& tree, std::size_t leaf);

// ---------------------------------------------------------------------------
// Generation

enum class TreeKind { deterministic, binomial, trinomial, quantized_gaussian };

/// additive: P_child = P_parent + shock; independent: P_child = mean + shock.
enum class PriceLaw { additive, independent };

struct GeneratorSpec {
    TreeKind kind = TreeKind::binomial;
    PriceLaw law = PriceLaw::additive;
    int horizon = 2;
    double zeta0 = 0.0;
    double initial_price = 0.0;
    std::vector<double> prices;  // deterministic kind: P_0..P_T
    double step = 1.0;           // binomial/trinomial shock size; gaussian std dev
    double up_probability = 0.5; // binomial p_up; trinomial p_up = p_down
    int atoms = 3;               // quantized_gaussian atoms per step
    double mean = 0.0;           // independent law centre
    std::vector<double> resilience;  // T entries, or one entry for a constant
    std::vector<double> depth;       // T entries (t = 1..T), or one entry
    double endowment = 0.0;
    std::optional<double> delta_min;
};

ScenarioTree generate(const GeneratorSpec& spec);

/// Named presets: "det-example", "zero-price", "binomial", "notconvex",
/// "resilient". Throws std::invalid_argument for unknown names.
GeneratorSpec preset(std::string_view name);
std::vector<std::string> preset_names();

/// k-point quantization of N(0, 1): Gauss-Hermite nodes and weights, exact
/// for polynomial moments up to degree 2k-1.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};
Quadrature gauss_hermite(int points);

// ---------------------------------------------------------------------------
// Serialization

/// Parses the tree file format. Throws std::invalid_argument on malformed
/// JSON, unknown keys, wrong types or structural defects.
ScenarioTree load_tree_json(std::string_view text);
ScenarioTree load_tree_file(const std::string& path);
std::string dump_tree_json(const ScenarioTree& tree);

// ---------------------------------------------------------------------------
// Prior-work monotonicity condition: rho_{0,t}^2 delta_t strictly decreasing.

struct MonotonePathTrace {
    NodeId leaf;
    std::vector<double> sequence;          // t = 1..T
    std::optional<int> first_violation;    // first t with seq[t] >= seq[t-1]
};

struct MonotoneReport {
    bool holds = true;
    std::vector<MonotonePathTrace> paths;
};

MonotoneReport monotone_condition_check(const ScenarioTree& tree);

}  // namespace impactdp
