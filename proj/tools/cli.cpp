#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "impactdp/analysis.hpp"
#include "impactdp/oracle.hpp"
#include "impactdp/scenario_tree.hpp"
#include "impactdp/solver.hpp"
#include "impactdp/utility.hpp"

namespace impactdp::cli {
namespace {

using Json = nlohmann::ordered_json;

/// Input the user can fix: 2. Anything else thrown inside a command is 3.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::string command;
    std::string tree_path;
    std::string gen;
    std::string utility = "exp:alpha=1";
    double z = 0.0;
    int grid_xi = 41;
    int grid_zeta = 21;
    int grid_x = 21;
    int actions = 201;
    double k0 = 1.0;
    double k_factor = 2.0;
    std::string mode = "interpolated";
    std::string oracle_grid = "-1,-0.5,0,0.5,1";
    std::uint64_t seed = 1;
    std::string strategy_path;
    std::size_t samples = 0;
    std::size_t trials = 1000;
    std::string demo;
    std::string out_path;
    std::string format = "json";
};

Json config_echo(const RunConfig& c) {
    Json j;
    j["command"] = c.command;
    j["tree"] = c.tree_path.empty() ? Json(nullptr) : Json(c.tree_path);
    j["gen"] = c.gen.empty() ? Json(nullptr) : Json(c.gen);
    j["utility"] = c.utility;
    j["z"] = c.z;
    j["grid_xi"] = c.grid_xi;
    j["grid_zeta"] = c.grid_zeta;
    j["grid_x"] = c.grid_x;
    j["actions"] = c.actions;
    j["k0"] = c.k0;
    j["k_factor"] = c.k_factor;
    j["mode"] = c.mode;
    j["oracle_grid"] = c.oracle_grid;
    j["seed"] = c.seed;
    j["strategy"] = c.strategy_path.empty() ? Json(nullptr) : Json(c.strategy_path);
    j["samples"] = c.samples;
    j["trials"] = c.trials;
    j["demo"] = c.demo.empty() ? Json(nullptr) : Json(c.demo);
    j["format"] = c.format;
    return j;
}

ScenarioTree load_tree(const RunConfig& c) {
    if (c.tree_path.empty() == c.gen.empty()) throw InputError("exactly one of --tree or --gen is required");
    try {
        if (!c.gen.empty()) return generate(preset(c.gen));
        return load_tree_file(c.tree_path);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

Utility load_utility(const RunConfig& c) {
    try {
        return Utility::parse(c.utility);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

ScenarioTree load_valid_tree(const RunConfig& c) {
    ScenarioTree tree = load_tree(c);
    const ValidationReport report = validate(tree);
    if (!report.ok()) throw InputError("invalid tree: " + report.violations.front().message);
    return tree;
}

SolveConfig solve_config(const RunConfig& c) {
    SolveConfig config;
    config.cash_points = c.grid_xi;
    config.spread_points = c.grid_zeta;
    config.position_points = c.grid_x;
    config.action_points = c.actions;
    config.k0 = c.k0;
    config.k_factor = c.k_factor;
    if (c.mode == "exact") {
        config.mode = ContinuationMode::exact;
    } else if (c.mode != "interpolated") {
        throw InputError("--mode must be interpolated or exact");
    }
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    return config;
}

Json strategy_json(const ScenarioTree& tree, const PredictableAssignment& strategy) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (const auto h = strategy.at(i)) rows.push_back({{"node", tree.node(i).id}, {"h", *h}});
    }
    return rows;
}

std::string strategy_csv(const ScenarioTree& tree, const PredictableAssignment& strategy) {
    std::ostringstream out;
    out.precision(17);
    out << "node,h\n";
    for (std::size_t i = 0; i < tree.size(); ++i)
        if (const auto h = strategy.at(i)) out << tree.node(i).id << ',' << *h << '\n';
    return out.str();
}

PredictableAssignment load_strategy(const ScenarioTree& tree, const std::string& path) {
    PredictableAssignment strategy(tree);
    if (path.empty()) {
        for (std::size_t i = 0; i < tree.size(); ++i)
            if (tree.node(i).time < tree.horizon()) strategy.set(i, 0.0);
        return strategy;
    }
    std::ifstream in(path);
    if (!in) throw InputError("cannot open strategy file " + path);
    try {
        const Json doc = Json::parse(in);
        const Json& rows = doc.is_array() ? doc : doc.at("strategy");
        for (const Json& row : rows) {
            const auto index = tree.index_of(row.at("node").get<NodeId>());
            strategy.set(index, row.at("h").get<double>());
        }
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed strategy file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("bad strategy: ") + e.what());
    } catch (const std::out_of_range& e) {
        throw InputError(std::string("bad strategy: ") + e.what());
    }

    bool last_layer_missing = false;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const int t = tree.node(i).time;
        if (t <= tree.horizon() - 2 && !strategy.at(i))
            throw InputError("strategy has no trade for node " + std::to_string(tree.node(i).id));
        if (t == tree.horizon() - 1 && !strategy.at(i)) last_layer_missing = true;
    }
    if (last_layer_missing) force_liquidation(strategy);
    if (!strategy.liquidating()) throw InputError("strategy does not liquidate on every path");
    return strategy;
}

struct Output {
    std::string text;
    int code = ok;
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

Output cmd_solve(const RunConfig& c, std::ostream& err) {
    const ScenarioTree tree = load_valid_tree(c);
    const Utility u = load_utility(c);
    const SolveConfig config = solve_config(c);

    const SolveResult solved = backward_induce(tree, u, c.z, config);
    const PredictableAssignment strategy = forward_extract(tree, solved, u, c.z, config);
    const double realized = evaluate_strategy(tree, strategy, u, c.z);
    if (!std::isfinite(realized)) throw NumericError("strategy value is not finite");
    if (solved.diagnostics.k_exhausted > 0)
        err << "warning: action bound search hit the expansion limit at " << solved.diagnostics.k_exhausted
            << " states\n";

    if (c.format == "csv") return {strategy_csv(tree, strategy)};
    Json j;
    j["root_value"] = solved.root_value;
    j["strategy_value"] = realized;
    j["strategy"] = strategy_json(tree, strategy);
    j["config_echo"] = config_echo(c);
    j["diagnostics"] = {{"k_expansions", solved.diagnostics.k_expansions},
                        {"k_exhausted", solved.diagnostics.k_exhausted},
                        {"monotonicity_violations", solved.diagnostics.monotonicity_violations},
                        {"grid_points", solved.diagnostics.grid_points}};
    return {dump(j)};
}

Output cmd_oracle(const RunConfig& c, std::ostream& err) {
    const ScenarioTree tree = load_valid_tree(c);
    const Utility u = load_utility(c);
    std::optional<ActionGrid> grid;
    try {
        grid.emplace(ActionGrid::parse(c.oracle_grid));
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }

    const OracleResult brute = brute_force_solve(tree, u, c.z, *grid);
    const OracleResult history = history_dp(tree, u, c.z, *grid);
    const bool identical = brute.value == history.value;
    if (!identical)
        err << "oracle mismatch: brute_force " << brute.value << " vs history_dp " << history.value << '\n';

    Json results = Json::array();
    for (const OracleResult* r : {&brute, &history}) {
        Json j;
        j["method"] = r->method;
        j["root_value"] = r->value;
        j["strategy"] = strategy_json(tree, r->strategy);
        j["config_echo"] = config_echo(c);
        j["diagnostics"] = {{"evaluated", r->evaluated}};
        results.push_back(std::move(j));
    }
    Json j;
    j["identical"] = identical;
    j["results"] = std::move(results);
    return {dump(j), identical ? ok : check_failed};
}

Output cmd_evaluate(const RunConfig& c) {
    const ScenarioTree tree = load_valid_tree(c);
    const Utility u = load_utility(c);
    const PredictableAssignment strategy = load_strategy(tree, c.strategy_path);
    const double exact = evaluate_strategy(tree, strategy, u, c.z);
    if (!std::isfinite(exact)) throw NumericError("strategy value is not finite");

    Json j;
    j["value"] = exact;
    if (c.samples > 0) {
        if (c.samples < 2) throw InputError("--samples needs at least 2");
        const MonteCarloEstimate mc = monte_carlo_eval(tree, strategy, u, c.z, c.samples, c.seed);
        j["monte_carlo"] = {{"estimate", mc.estimate}, {"stderr", mc.stderr_}, {"samples", mc.samples}};
    }
    j["strategy"] = strategy_json(tree, strategy);
    j["config_echo"] = config_echo(c);
    return {dump(j)};
}

Output demo_nonconvex(const RunConfig& c) {
    const NonconvexityReport r = nonconvexity_demo();
    const double expected[] = {r.q_h, r.q_g, r.midpoint};
    bool matches = r.explicit_friction.size() == 3;
    for (std::size_t i = 0; matches && i < 3; ++i)
        matches = std::abs(r.explicit_friction[i] - expected[i]) <= 1e-12;

    Json j;
    j["q_h"] = r.q_h;
    j["q_g"] = r.q_g;
    j["average"] = r.average;
    j["midpoint"] = r.midpoint;
    j["margin"] = r.margin;
    j["explicit_friction"] = r.explicit_friction;
    j["explicit_matches"] = matches;
    j["convexity_fails"] = r.violated;
    j["config_echo"] = config_echo(c);
    return {dump(j), r.violated && matches ? ok : check_failed};
}

Output demo_indirect_utility(const RunConfig& c) {
    std::vector<double> grid;
    for (int i = 0; i <= 80; ++i) grid.push_back(1.05 + 0.05 * i);
    const IndirectUtilityReport r = indirect_utility_demo(grid);
    const int code = r.kink && r.concavity_failure ? ok : check_failed;

    if (c.format == "csv") {
        std::ostringstream out;
        out.precision(17);
        out << "z,u\n";
        for (const auto& [z, v] : r.curve) out << z << ',' << v << '\n';
        return {out.str(), code};
    }
    Json j;
    j["value_at_2"] = r.value_at_kink;
    j["left_slope"] = r.left_slope;
    j["right_slope"] = r.right_slope;
    j["kink"] = r.kink;
    j["concavity_fails"] = r.concavity_failure;
    Json curve = Json::array();
    for (const auto& [z, v] : r.curve) curve.push_back({{"z", z}, {"u", v}});
    j["curve"] = std::move(curve);
    j["config_echo"] = config_echo(c);
    return {dump(j), code};
}

Output demo_convexity(const RunConfig& c) {
    const ScenarioTree tree = load_valid_tree(c);
    std::optional<ActionGrid> grid;
    try {
        grid.emplace(ActionGrid::parse(c.oracle_grid));
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    const ConvexityReport r = convexity_probe(tree, c.trials, *grid, c.seed);
    Json violations = Json::array();
    for (const auto& v : r.violations)
        violations.push_back({{"h", v.h}, {"g", v.g}, {"midpoint", v.midpoint_friction},
                              {"average", v.average_friction}});
    Json j;
    j["pairs_tested"] = r.pairs_tested;
    j["violation_count"] = r.violations.size();
    j["violations"] = std::move(violations);
    j["config_echo"] = config_echo(c);
    return {dump(j)};
}

Output cmd_demo(const RunConfig& c) {
    if (c.format == "csv" && c.demo != "indirect-utility")
        throw InputError("--format csv is only available for the indirect-utility demo");
    if (c.demo == "nonconvex") return demo_nonconvex(c);
    if (c.demo == "indirect-utility") return demo_indirect_utility(c);
    if (c.demo == "convexity") return demo_convexity(c);
    throw InputError("unknown demo '" + c.demo + "' (nonconvex, indirect-utility, convexity)");
}

Output cmd_check(const RunConfig& c) {
    const ScenarioTree tree = load_tree(c);
    const Utility u = load_utility(c);
    std::vector<std::string> reasons;

    const ValidationReport validation = validate(tree);
    Json violations = Json::array();
    for (const auto& v : validation.violations) {
        violations.push_back({{"kind", std::string(to_string(v.kind))}, {"message", v.message}});
        const std::string kind(to_string(v.kind));
        if (std::find(reasons.begin(), reasons.end(), kind) == reasons.end()) reasons.push_back(kind);
    }

    const auto probe = default_probe_grid();
    const UtilityReport assumptions = check_assumptions(u, probe);
    if (!assumptions.ok()) reasons.push_back("utility-assumptions");

    Json monotone = nullptr;
    if (validation.ok()) {
        const MonotoneReport m = monotone_condition_check(tree);
        if (!m.holds) reasons.push_back("monotone-condition");
        Json paths = Json::array();
        for (const auto& p : m.paths) {
            paths.push_back({{"leaf", p.leaf},
                             {"sequence", p.sequence},
                             {"first_violation", p.first_violation ? Json(*p.first_violation) : Json(nullptr)}});
        }
        monotone = {{"holds", m.holds}, {"paths", std::move(paths)}};
    }

    Json j;
    j["ok"] = reasons.empty();
    j["reasons"] = reasons;
    j["validation"] = {{"ok", validation.ok()}, {"violations", std::move(violations)}};
    j["utility"] = {{"ok", assumptions.ok()},
                    {"upper_bound", assumptions.upper_bound},
                    {"monotonicity_violations", assumptions.monotonicity_violations},
                    {"above_bound", assumptions.above_bound},
                    {"tail_ok", assumptions.tail_ok}};
    j["monotone_condition"] = std::move(monotone);
    j["config_echo"] = config_echo(c);
    return {dump(j), reasons.empty() ? ok : check_failed};
}

Output cmd_gen_tree(const RunConfig& c) {
    if (c.format != "json") throw InputError("gen-tree writes json only");
    return {dump_tree_json(load_tree(c))};
}

void emit(const RunConfig& c, const std::string& text, std::ostream& out) {
    if (c.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(c.out_path, std::ios::binary);
    if (!file) throw InputError("cannot write " + c.out_path);
    file << text;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig c;
    CLI::App app{"Optimal execution under transient price impact on scenario trees", "impactdp"};
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--tree", c.tree_path, "Scenario tree JSON file");
    app.add_option("--gen", c.gen, "Generator preset")
        ->check(CLI::IsMember(preset_names()));
    app.add_option("--utility", c.utility, "exp:alpha=A | cap:cap=C | pwl:knots=x,y;...");
    app.add_option("--z", c.z, "Initial capital");
    app.add_option("--grid-xi", c.grid_xi, "Cash axis points");
    app.add_option("--grid-zeta", c.grid_zeta, "Spread axis points");
    app.add_option("--grid-x", c.grid_x, "Position axis points");
    app.add_option("--actions", c.actions, "Action grid points on [-K, K]");
    app.add_option("--k0", c.k0, "Initial action bound");
    app.add_option("--k-factor", c.k_factor, "Action bound expansion factor");
    app.add_option("--mode", c.mode, "interpolated | exact");
    app.add_option("--oracle-grid", c.oracle_grid, "Comma separated oracle actions (must contain 0)");
    app.add_option("--seed", c.seed, "Random seed");
    app.add_option("--strategy", c.strategy_path, "Strategy JSON (evaluate)");
    app.add_option("--samples", c.samples, "Monte Carlo samples (evaluate)");
    app.add_option("--trials", c.trials, "Strategy pairs (demo convexity)");
    app.add_option("--out", c.out_path, "Output file (default stdout)");
    app.add_option("--format", c.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

    app.add_subcommand("solve", "Backward induction and forward extraction");
    app.add_subcommand("oracle", "Brute force and history recursion on an action grid");
    app.add_subcommand("evaluate", "Expected utility of a given strategy");
    app.add_subcommand("demo", "Worked counterexamples")
        ->add_option("which", c.demo, "nonconvex | indirect-utility | convexity")
        ->required();
    app.add_subcommand("check", "Tree validation, utility assumptions and the monotone condition");
    app.add_subcommand("gen-tree", "Write a preset tree as JSON");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return invalid_input;
    }
    c.command = app.get_subcommands().front()->get_name();

    try {
        Output result;
        if (c.command == "solve") result = cmd_solve(c, err);
        else if (c.command == "oracle") result = cmd_oracle(c, err);
        else if (c.command == "evaluate") result = cmd_evaluate(c);
        else if (c.command == "demo") result = cmd_demo(c);
        else if (c.command == "check") result = cmd_check(c);
        else result = cmd_gen_tree(c);
        emit(c, result.text, out);
        return result.code;
    } catch (const CapacityError& e) {
        err << "error: " << e.what() << " (estimate " << e.estimate() << ")\n";
        return capacity_exceeded;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return invalid_input;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return invalid_input;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return numeric_failure;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return invalid_input;
    } catch (const std::exception& e) {
        err << "numeric error: " << e.what() << '\n';
        return numeric_failure;
    }
}

}  // namespace impactdp::cli
