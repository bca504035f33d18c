#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace impactdp {

class ScenarioTree;

enum class UtilityFamily { exponential, capped_linear, piecewise_linear };

/// Utility functions that are non-decreasing, continuous, bounded above and
/// tend to -infinity at -infinity. Concavity is neither required nor assumed.
class Utility {
public:
    /// u(x) = -exp(-alpha x), alpha > 0. Upper bound 0.
    static Utility exponential(double alpha);
    /// u(x) = min(x, cap). Upper bound cap.
    static Utility capped_linear(double cap);
    /// Linear interpolation through knots sorted by x, flat after the last knot
    /// and slope 1 before the first. Upper bound is the largest knot value.
    /// Knots may describe a decreasing segment; check_assumptions() reports it.
    static Utility piecewise_linear(std::vector<std::pair<double, double>> knots);

    /// "exp:alpha=1.0", "cap:cap=5.0" or "pwl:knots=x0,y0;x1,y1;...".
    /// Throws std::invalid_argument on anything else.
    static Utility parse(std::string_view spec);

    double operator()(double x) const;
    double upper_bound() const { return upper_bound_; }
    UtilityFamily family() const { return family_; }
    std::string to_string() const;

private:
    Utility() = default;

    UtilityFamily family_ = UtilityFamily::exponential;
    double parameter_ = 1.0;
    std::vector<std::pair<double, double>> knots_;
    double upper_bound_ = 0.0;
};

struct UtilityReport {
    double upper_bound = 0.0;
    int monotonicity_violations = 0;
    int above_bound = 0;
    bool tail_ok = true;  // u(min probe) <= -1e3
    std::vector<double> first_offenders;

    bool ok() const { return monotonicity_violations == 0 && above_bound == 0 && tail_ok; }
};

/// Probes monotonicity, the upper bound and the left tail on `probe_grid`
/// (sorted ascending; should span at least [-1e6, 1e6]).
UtilityReport check_assumptions(const Utility& u, std::span<const double> probe_grid);

/// Symmetric probe grid on [-1e6, 1e6]: log-spaced tails plus a fine core.
std::vector<double> default_probe_grid();

/// True when E[u(x + y P_t + w P_T - B)] is finite for every t in 1..T-1 and
/// every (x, y, w) in the cartesian grid.
bool expected_utility_finite(const ScenarioTree& tree, const Utility& u,
                             std::span<const double> grid);

}  // namespace impactdp
