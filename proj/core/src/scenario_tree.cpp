#include "impactdp/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace impactdp {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kProbabilityTolerance = 1e-9;

[[noreturn]] void fail(const std::string& message) {
    throw std::invalid_argument(message);
}

std::string node_label(NodeId id) { return "node " + std::to_string(id); }

double schedule_at(const std::vector<double>& schedule, int index, const char* name) {
    if (schedule.size() == 1) return schedule.front();
    if (index < 0 || static_cast<std::size_t>(index) >= schedule.size())
        fail(std::string("generate: ") + name + " schedule needs 1 or T entries");
    return schedule[index];
}

}  // namespace

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::horizon_too_short: return "horizon-too-short";
        case ViolationKind::negative_zeta0: return "negative-zeta0";
        case ViolationKind::root: return "root";
        case ViolationKind::probability_sum: return "probability-sum";
        case ViolationKind::probability_range: return "probability-range";
        case ViolationKind::missing_field: return "missing-field";
        case ViolationKind::negative_resilience: return "negative-resilience";
        case ViolationKind::depth_bound: return "depth-bound";
        case ViolationKind::leaf_time: return "leaf-time";
        case ViolationKind::missing_children: return "missing-children";
    }
    return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
}

// ---------------------------------------------------------------------------

ScenarioTree::ScenarioTree(int horizon, double zeta0, std::vector<TreeNode> nodes,
                           std::optional<double> delta_min)
    : horizon_(horizon), zeta0_(zeta0), nodes_(std::move(nodes)) {
    if (horizon_ < 0) fail("ScenarioTree: horizon must be non-negative");
    if (nodes_.empty()) fail("ScenarioTree: no nodes");

    const std::size_t n = nodes_.size();
    parent_.assign(n, std::nullopt);
    children_.assign(n, {});
    by_time_.assign(static_cast<std::size_t>(horizon_) + 1, {});
    path_prob_.assign(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const TreeNode& node = nodes_[i];
        if (!index_.emplace(node.id, i).second) fail("ScenarioTree: duplicate " + node_label(node.id));
        if (node.time < 0 || node.time > horizon_)
            fail("ScenarioTree: " + node_label(node.id) + " has time outside [0, T]");

        if (!node.parent) {
            if (i != 0) fail("ScenarioTree: only the first node may be the root (" + node_label(node.id) + ")");
            if (node.time != 0) fail("ScenarioTree: root must have time 0");
            path_prob_[i] = node.cond_prob;
        } else {
            if (i == 0) fail("ScenarioTree: first node must be the root");
            const auto it = index_.find(*node.parent);
            if (it == index_.end() || it->second == i)
                fail("ScenarioTree: " + node_label(node.id) +
                     " references a parent that does not precede it");
            const std::size_t p = it->second;
            if (node.time != nodes_[p].time + 1)
                fail("ScenarioTree: " + node_label(node.id) + " time must be parent time + 1");
            parent_[i] = p;
            children_[p].push_back(i);
            path_prob_[i] = path_prob_[p] * node.cond_prob;
        }
        by_time_[node.time].push_back(i);
    }

    if (delta_min) {
        delta_min_ = *delta_min;
    } else {
        delta_min_ = std::numeric_limits<double>::infinity();
        for (const auto& node : nodes_)
            if (node.depth) delta_min_ = std::min(delta_min_, *node.depth);
    }
}

std::optional<std::size_t> ScenarioTree::parent(std::size_t index) const {
    return parent_.at(index);
}

std::span<const std::size_t> ScenarioTree::children(std::size_t index) const {
    return children_.at(index);
}

std::size_t ScenarioTree::index_of(NodeId id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) fail("ScenarioTree: unknown " + node_label(id));
    return it->second;
}

const std::vector<std::size_t>& ScenarioTree::nodes_at(int time) const {
    if (time < 0 || time > horizon_) fail("ScenarioTree::nodes_at: time out of range");
    return by_time_[time];
}

std::vector<std::size_t> ScenarioTree::ancestry(std::size_t index) const {
    std::vector<std::size_t> out;
    std::optional<std::size_t> cur = index;
    while (cur) {
        out.push_back(*cur);
        cur = parent_.at(*cur);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::size_t ScenarioTree::ancestor_at(std::size_t index, int time) const {
    if (time < 0 || time > nodes_.at(index).time) fail("ScenarioTree::ancestor_at: bad time");
    while (nodes_[index].time > time) index = *parent_[index];
    return index;
}

// ---------------------------------------------------------------------------

ValidationReport validate(const ScenarioTree& tree) {
    ValidationReport report;
    auto add = [&](ViolationKind kind, std::optional<NodeId> id, std::string msg) {
        report.violations.push_back({kind, id, std::move(msg)});
    };

    const int T = tree.horizon();
    if (T < 2) add(ViolationKind::horizon_too_short, std::nullopt, "horizon T must be at least 2");
    if (!(tree.zeta0() >= 0.0)) add(ViolationKind::negative_zeta0, std::nullopt, "zeta0 must be >= 0");
    if (!(tree.delta_min() > 0.0))
        add(ViolationKind::depth_bound, std::nullopt,
            "depth lower bound delta_min must be > 0 (depth has to stay above a positive constant)");

    const TreeNode& root = tree.node(tree.root());
    if (std::abs(root.cond_prob - 1.0) > kProbabilityTolerance)
        add(ViolationKind::root, root.id, "root must have probability 1");

    for (std::size_t i = 0; i < tree.size(); ++i) {
        const TreeNode& node = tree.node(i);
        const auto id = node.id;

        if (!(node.cond_prob > 0.0 && node.cond_prob <= 1.0))
            add(ViolationKind::probability_range, id, node_label(id) + ": p must lie in (0, 1]");
        if (!std::isfinite(node.price))
            add(ViolationKind::missing_field, id, node_label(id) + ": P must be finite");

        if (node.time <= T - 1) {
            if (!node.resilience) {
                add(ViolationKind::missing_field, id, node_label(id) + ": r required for t <= T-1");
            } else if (!(*node.resilience >= 0.0)) {
                add(ViolationKind::negative_resilience, id, node_label(id) + ": r must be >= 0");
            }
        }
        if (node.time >= 1) {
            if (!node.depth) {
                add(ViolationKind::missing_field, id, node_label(id) + ": delta required for t >= 1");
            } else if (!(*node.depth > 0.0) || *node.depth < tree.delta_min()) {
                std::ostringstream msg;
                msg << node_label(id) << ": depth " << *node.depth
                    << " violates the lower bound delta >= " << tree.delta_min() << " > 0";
                add(ViolationKind::depth_bound, id, msg.str());
            }
        }
        if (node.time == T && !node.endowment)
            add(ViolationKind::missing_field, id, node_label(id) + ": B required at t = T");

        const auto kids = tree.children(i);
        if (kids.empty()) {
            if (node.time != T)
                add(ViolationKind::leaf_time, id, node_label(id) + ": leaf before the horizon");
        } else {
            double sum = 0.0;
            for (std::size_t c : kids) sum += tree.node(c).cond_prob;
            if (std::abs(sum - 1.0) > kProbabilityTolerance) {
                std::ostringstream msg;
                msg << node_label(id) << ": children probabilities sum to " << sum;
                add(ViolationKind::probability_sum, id, msg.str());
            }
        }
        if (node.time < T && kids.empty())
            add(ViolationKind::missing_children, id, node_label(id) + ": needs at least one child");
    }
    return report;
}

double conditional_expectation(const ScenarioTree& tree, std::size_t node,
                               const std::unordered_map<NodeId, double>& leaf_values) {
    const auto kids = tree.children(node);
    if (kids.empty()) {
        const auto it = leaf_values.find(tree.node(node).id);
        if (it == leaf_values.end())
            fail("conditional_expectation: no value for leaf " + std::to_string(tree.node(node).id));
        return it->second;
    }
    double sum = 0.0;
    for (std::size_t c : kids)
        sum += tree.node(c).cond_prob * conditional_expectation(tree, c, leaf_values);
    return sum;
}

LeafPath extract_path(const ScenarioTree& tree, std::size_t leaf) {
    const TreeNode& last = tree.node(leaf);
    if (last.time != tree.horizon() || !tree.children(leaf).empty())
        fail("extract_path: " + node_label(last.id) + " is not a leaf at time T");

    auto nodes = tree.ancestry(leaf);
    std::vector<double> price, resilience, depth;
    for (std::size_t i : nodes) {
        const TreeNode& n = tree.node(i);
        price.push_back(n.price);
        if (n.time < tree.horizon()) {
            if (!n.resilience) fail("extract_path: " + node_label(n.id) + " has no r");
            resilience.push_back(*n.resilience);
        }
        if (n.time >= 1) {
            if (!n.depth) fail("extract_path: " + node_label(n.id) + " has no delta");
            depth.push_back(*n.depth);
        }
    }
    return LeafPath{MarketPath(tree.zeta0(), std::move(price), std::move(resilience), std::move(depth)),
                    last.endowment.value_or(0.0), tree.path_probability(leaf), std::move(nodes)};
}

// ---------------------------------------------------------------------------

Quadrature gauss_hermite(int points) {
    if (points < 1) fail("gauss_hermite: need at least one point");
    // Golub-Welsch on the Jacobi matrix of probabilists' Hermite polynomials.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
    for (int i = 1; i < points; ++i) {
        jacobi(i, i - 1) = std::sqrt(static_cast<double>(i));
        jacobi(i - 1, i) = jacobi(i, i - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    Quadrature q;
    for (int i = 0; i < points; ++i) {
        double node = solver.eigenvalues()(i);
        if (std::abs(node) < 1e-13) node = 0.0;
        q.nodes.push_back(node);
        const double v = solver.eigenvectors()(0, i);
        q.weights.push_back(v * v);
    }
    // Symmetrize to remove eigen-solver noise: the rule is exactly symmetric.
    for (int i = 0; i < points / 2; ++i) {
        const int j = points - 1 - i;
        const double node = 0.5 * (q.nodes[j] - q.nodes[i]);
        const double weight = 0.5 * (q.weights[i] + q.weights[j]);
        q.nodes[i] = -node;
        q.nodes[j] = node;
        q.weights[i] = q.weights[j] = weight;
    }
    double total = 0.0;
    for (double w : q.weights) total += w;
    for (double& w : q.weights) w /= total;
    return q;
}

ScenarioTree generate(const GeneratorSpec& spec) {
    const int T = spec.horizon;
    if (T < 1) fail("generate: horizon must be >= 1");
    if (spec.resilience.empty() || spec.depth.empty())
        fail("generate: resilience and depth schedules are required");
    for (const auto* schedule : {&spec.resilience, &spec.depth})
        if (schedule->size() != 1 && static_cast<int>(schedule->size()) != T)
            fail("generate: schedules need 1 or T entries");

    // Shocks and their probabilities for one step.
    std::vector<double> shocks;
    std::vector<double> probs;
    switch (spec.kind) {
        case TreeKind::deterministic:
            if (static_cast<int>(spec.prices.size()) != T + 1)
                fail("generate: deterministic spec needs T+1 prices");
            shocks = {0.0};
            probs = {1.0};
            break;
        case TreeKind::binomial:
            if (!(spec.up_probability > 0.0 && spec.up_probability < 1.0))
                fail("generate: binomial up probability must lie in (0, 1)");
            shocks = {spec.step, -spec.step};
            probs = {spec.up_probability, 1.0 - spec.up_probability};
            break;
        case TreeKind::trinomial:
            if (!(spec.up_probability > 0.0 && spec.up_probability < 0.5))
                fail("generate: trinomial up probability must lie in (0, 0.5)");
            shocks = {spec.step, 0.0, -spec.step};
            probs = {spec.up_probability, 1.0 - 2.0 * spec.up_probability, spec.up_probability};
            break;
        case TreeKind::quantized_gaussian: {
            if (spec.atoms < 1 || spec.atoms > 15) fail("generate: atoms must be in [1, 15]");
            if (!(spec.step > 0.0)) fail("generate: gaussian std dev must be > 0");
            const Quadrature q = gauss_hermite(spec.atoms);
            for (int i = 0; i < spec.atoms; ++i) {
                shocks.push_back(spec.step * q.nodes[i]);
                probs.push_back(q.weights[i]);
            }
            break;
        }
    }

    std::vector<TreeNode> nodes;
    TreeNode root;
    root.id = 0;
    root.time = 0;
    root.cond_prob = 1.0;
    root.price = spec.kind == TreeKind::deterministic ? spec.prices[0] : spec.initial_price;
    if (T >= 1) root.resilience = schedule_at(spec.resilience, 0, "resilience");
    if (T == 0) root.endowment = spec.endowment;
    nodes.push_back(root);

    std::vector<std::size_t> frontier{0};
    for (int t = 1; t <= T; ++t) {
        std::vector<std::size_t> next;
        for (std::size_t parent : frontier) {
            for (std::size_t k = 0; k < shocks.size(); ++k) {
                TreeNode child;
                child.id = static_cast<NodeId>(nodes.size());
                child.parent = nodes[parent].id;
                child.time = t;
                child.cond_prob = probs[k];
                if (spec.kind == TreeKind::deterministic) {
                    child.price = spec.prices[t];
                } else if (spec.law == PriceLaw::additive) {
                    child.price = nodes[parent].price + shocks[k];
                } else {
                    child.price = spec.mean + shocks[k];
                }
                if (t < T) child.resilience = schedule_at(spec.resilience, t, "resilience");
                child.depth = schedule_at(spec.depth, t - 1, "depth");
                if (t == T) child.endowment = spec.endowment;
                next.push_back(nodes.size());
                nodes.push_back(child);
            }
        }
        frontier = std::move(next);
    }
    return ScenarioTree(T, spec.zeta0, std::move(nodes), spec.delta_min);
}

GeneratorSpec preset(std::string_view name) {
    GeneratorSpec spec;
    if (name == "det-example") {
        spec.kind = TreeKind::deterministic;
        spec.horizon = 2;
        spec.prices = {0.0, 0.0, 1.0};
        spec.resilience = {0.0};
        spec.depth = {1.0};
    } else if (name == "zero-price") {
        spec.kind = TreeKind::binomial;
        spec.horizon = 3;
        spec.zeta0 = 0.1;
        spec.step = 0.0;
        spec.resilience = {0.5};
        spec.depth = {1.0};
    } else if (name == "binomial") {
        spec.kind = TreeKind::binomial;
        spec.horizon = 3;
        spec.zeta0 = 0.1;
        spec.step = 1.0;
        spec.up_probability = 0.7;
        spec.resilience = {0.5};
        spec.depth = {5.0};
    } else if (name == "notconvex") {
        spec.kind = TreeKind::quantized_gaussian;
        spec.law = PriceLaw::independent;
        spec.horizon = 3;
        spec.zeta0 = 0.0;
        spec.step = 1.0;
        spec.atoms = 3;
        spec.resilience = {0.0};
        spec.depth = {1.0, 10.0, 10.0};
    } else if (name == "resilient") {
        spec.kind = TreeKind::binomial;
        spec.horizon = 3;
        spec.zeta0 = 0.1;
        spec.step = 1.0;
        spec.resilience = {0.5};
        spec.depth = {1.0};
    } else {
        fail("unknown preset '" + std::string(name) + "'");
    }
    return spec;
}

std::vector<std::string> preset_names() {
    return {"det-example", "zero-price", "binomial", "notconvex", "resilient"};
}

// ---------------------------------------------------------------------------

namespace {

double require_number(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.is_number()) fail(where + ": '" + key + "' must be a number");
    return j.get<double>();
}

std::int64_t require_integer(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.is_number_integer()) fail(where + ": '" + key + "' must be an integer");
    return j.get<std::int64_t>();
}

}  // namespace

ScenarioTree load_tree_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("tree file: malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("tree file: top level must be an object");
    for (const auto& [key, _] : doc.items())
        if (key != "T" && key != "zeta0" && key != "nodes") fail("tree file: unknown key '" + key + "'");
    for (const char* key : {"T", "zeta0", "nodes"})
        if (!doc.contains(key)) fail(std::string("tree file: missing '") + key + "'");

    const auto horizon = require_integer(doc["T"], "T", "tree file");
    const double zeta0 = require_number(doc["zeta0"], "zeta0", "tree file");
    if (!doc["nodes"].is_array()) fail("tree file: 'nodes' must be an array");

    std::vector<TreeNode> nodes;
    std::size_t position = 0;
    for (const auto& jn : doc["nodes"]) {
        const std::string where = "tree file: nodes[" + std::to_string(position++) + "]";
        if (!jn.is_object()) fail(where + ": must be an object");
        for (const auto& [key, _] : jn.items()) {
            static constexpr std::string_view allowed[] = {"id", "parent", "t", "p", "P", "r", "delta", "B"};
            if (std::find(std::begin(allowed), std::end(allowed), key) == std::end(allowed))
                fail(where + ": unknown key '" + key + "'");
        }
        for (const char* key : {"id", "parent", "t", "p", "P"})
            if (!jn.contains(key)) fail(where + ": missing '" + key + "'");

        TreeNode node;
        node.id = require_integer(jn["id"], "id", where);
        if (!jn["parent"].is_null()) node.parent = require_integer(jn["parent"], "parent", where);
        node.time = static_cast<int>(require_integer(jn["t"], "t", where));
        node.cond_prob = require_number(jn["p"], "p", where);
        node.price = require_number(jn["P"], "P", where);
        if (jn.contains("r")) node.resilience = require_number(jn["r"], "r", where);
        if (jn.contains("delta")) node.depth = require_number(jn["delta"], "delta", where);
        if (jn.contains("B")) node.endowment = require_number(jn["B"], "B", where);
        nodes.push_back(node);
    }
    return ScenarioTree(static_cast<int>(horizon), zeta0, std::move(nodes));
}

ScenarioTree load_tree_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open tree file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_tree_json(buffer.str());
}

std::string dump_tree_json(const ScenarioTree& tree) {
    ordered_json doc;
    doc["T"] = tree.horizon();
    doc["zeta0"] = tree.zeta0();
    doc["nodes"] = ordered_json::array();
    for (const TreeNode& n : tree.nodes()) {
        ordered_json jn;
        jn["id"] = n.id;
        jn["parent"] = n.parent ? ordered_json(*n.parent) : ordered_json(nullptr);
        jn["t"] = n.time;
        jn["p"] = n.cond_prob;
        jn["P"] = n.price;
        if (n.resilience) jn["r"] = *n.resilience;
        if (n.depth) jn["delta"] = *n.depth;
        if (n.endowment) jn["B"] = *n.endowment;
        doc["nodes"].push_back(std::move(jn));
    }
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

MonotoneReport monotone_condition_check(const ScenarioTree& tree) {
    MonotoneReport report;
    for (std::size_t leaf : tree.leaves()) {
        const LeafPath path = extract_path(tree, leaf);
        MonotonePathTrace trace{tree.node(leaf).id, {}, std::nullopt};
        for (int t = 1; t <= tree.horizon(); ++t) {
            const double rho = path.market.rho(0, t);
            trace.sequence.push_back(rho * rho * path.market.depth(t));
            if (t >= 2 && !trace.first_violation &&
                !(trace.sequence[t - 1] < trace.sequence[t - 2]))
                trace.first_violation = t;
        }
        if (trace.first_violation) report.holds = false;
        report.paths.push_back(std::move(trace));
    }
    return report;
}

}  // namespace impactdp
