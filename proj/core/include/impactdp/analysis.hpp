#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "impactdp/oracle.hpp"
#include "impactdp/scenario_tree.hpp"
#include "impactdp/strategy.hpp"
#include "impactdp/utility.hpp"

namespace impactdp {

/// 2.1 h1^2 + 0.3 h2^2 + 2.3 h1 h2: the spread cost of (h1, h2, -h1-h2) on
/// the depth profile (1, 10, 10) with zero resilience and zero initial spread,
/// for h1, h2 >= 0.
double friction_quadratic(double h1, double h2);

struct NonconvexityReport {
    double q_h = 0.0;       // Q(1, 1)
    double q_g = 0.0;       // Q(1.5, 0)
    double average = 0.0;
    double midpoint = 0.0;  // Q(1.25, 0.5)
    double margin = 0.0;    // midpoint - average
    /// -xi_T on the "notconvex" preset path with prices set to zero, for
    /// H, G and the midpoint, in that order.
    std::vector<double> explicit_friction;
    bool violated = false;  // midpoint > average
};

NonconvexityReport nonconvexity_demo();

/// max{ln z, (ln(z + 2) + ln(z - 1)) / 2}. Throws std::invalid_argument for z <= 1.
double indirect_utility(double z);

struct IndirectUtilityReport {
    std::vector<std::pair<double, double>> curve;
    double value_at_kink = 0.0;
    double left_slope = 0.0;
    double right_slope = 0.0;
    bool kink = false;                // right - left > 1e-3
    bool concavity_failure = false;   // right > left
};

/// Evaluates the curve on `z_grid` and the one-sided slopes at z = 2 with
/// offset 1e-6. Throws std::invalid_argument if any z <= 1.
IndirectUtilityReport indirect_utility_demo(std::span<const double> z_grid);

struct ConvexityViolation {
    std::vector<double> h;
    std::vector<double> g;
    double midpoint_friction = 0.0;
    double average_friction = 0.0;
};

struct ConvexityReport {
    std::size_t pairs_tested = 0;
    std::vector<ConvexityViolation> violations;
};

/// Expected spread cost -E[xi_T] of the deterministic trade schedule
/// (h_1..h_{T-1}, -sum) with every price set to zero.
double expected_friction(const ScenarioTree& tree, std::span<const double> schedule);

/// Samples pairs (H, G) of deterministic liquidating schedules from the grid
/// and records those whose midpoint costs more than the average cost. The
/// pair H = (1, 1, 0, ...), G = (1.5, 0, 0, ...) is always tested first when
/// T >= 3.
ConvexityReport convexity_probe(const ScenarioTree& tree, std::size_t trials, const ActionGrid& grid,
                                std::uint64_t seed);

/// Uniform in [0, 1) from (seed, stream, index), independent of call order.
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t samples = 0;
};

/// Averages u(z + xi_T - B) over n sampled root -> leaf paths. Throws
/// std::invalid_argument for a non-liquidating strategy or n < 2.
MonteCarloEstimate monte_carlo_eval(const ScenarioTree& tree, const PredictableAssignment& strategy,
                                    const Utility& u, double z, std::size_t n, std::uint64_t seed);

}  // namespace impactdp
