#include "impactdp/utility.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "impactdp/scenario_tree.hpp"

namespace impactdp {
namespace {

[[noreturn]] void bad_spec(std::string_view spec, const std::string& why) {
    throw std::invalid_argument("utility '" + std::string(spec) + "': " + why);
}

double parse_double(std::string_view text, std::string_view spec) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
        bad_spec(spec, "cannot parse number '" + std::string(text) + "'");
    return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::string format_number(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace

Utility Utility::exponential(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("exponential utility: alpha must be > 0");
    Utility u;
    u.family_ = UtilityFamily::exponential;
    u.parameter_ = alpha;
    u.upper_bound_ = 0.0;
    return u;
}

Utility Utility::capped_linear(double cap) {
    if (!std::isfinite(cap)) throw std::invalid_argument("capped linear utility: cap must be finite");
    Utility u;
    u.family_ = UtilityFamily::capped_linear;
    u.parameter_ = cap;
    u.upper_bound_ = cap;
    return u;
}

Utility Utility::piecewise_linear(std::vector<std::pair<double, double>> knots) {
    if (knots.empty()) throw std::invalid_argument("piecewise linear utility: need at least one knot");
    std::sort(knots.begin(), knots.end());
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!std::isfinite(knots[i].first) || !std::isfinite(knots[i].second))
            throw std::invalid_argument("piecewise linear utility: knots must be finite");
        if (i > 0 && knots[i].first == knots[i - 1].first)
            throw std::invalid_argument("piecewise linear utility: duplicate knot abscissa");
    }
    Utility u;
    u.family_ = UtilityFamily::piecewise_linear;
    u.upper_bound_ = knots.front().second;
    for (const auto& k : knots) u.upper_bound_ = std::max(u.upper_bound_, k.second);
    u.knots_ = std::move(knots);
    return u;
}

Utility Utility::parse(std::string_view spec) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) bad_spec(spec, "expected '<family>:<key>=<value>'");
    const std::string_view family = spec.substr(0, colon);
    const std::string_view rest = spec.substr(colon + 1);
    const auto eq = rest.find('=');
    if (eq == std::string_view::npos) bad_spec(spec, "expected '<key>=<value>'");
    const std::string_view key = rest.substr(0, eq);
    const std::string_view value = rest.substr(eq + 1);

    if (family == "exp") {
        if (key != "alpha") bad_spec(spec, "exp takes 'alpha'");
        return exponential(parse_double(value, spec));
    }
    if (family == "cap") {
        if (key != "cap") bad_spec(spec, "cap takes 'cap'");
        return capped_linear(parse_double(value, spec));
    }
    if (family == "pwl") {
        if (key != "knots") bad_spec(spec, "pwl takes 'knots'");
        std::vector<std::pair<double, double>> knots;
        for (std::string_view pair : split(value, ';')) {
            if (pair.empty()) continue;
            const auto xy = split(pair, ',');
            if (xy.size() != 2) bad_spec(spec, "knot '" + std::string(pair) + "' is not 'x,y'");
            knots.emplace_back(parse_double(xy[0], spec), parse_double(xy[1], spec));
        }
        try {
            return piecewise_linear(std::move(knots));
        } catch (const std::invalid_argument& e) {
            bad_spec(spec, e.what());
        }
    }
    bad_spec(spec, "unknown family '" + std::string(family) + "'");
}

double Utility::operator()(double x) const {
    switch (family_) {
        case UtilityFamily::exponential:
            return -std::exp(-parameter_ * x);
        case UtilityFamily::capped_linear:
            return std::min(x, parameter_);
        case UtilityFamily::piecewise_linear: {
            if (x <= knots_.front().first) return knots_.front().second + (x - knots_.front().first);
            if (x >= knots_.back().first) return knots_.back().second;
            const auto upper = std::upper_bound(
                knots_.begin(), knots_.end(), x,
                [](double v, const std::pair<double, double>& k) { return v < k.first; });
            const auto lower = upper - 1;
            const double w = (x - lower->first) / (upper->first - lower->first);
            return lower->second + w * (upper->second - lower->second);
        }
    }
    return 0.0;
}

std::string Utility::to_string() const {
    switch (family_) {
        case UtilityFamily::exponential: return "exp:alpha=" + format_number(parameter_);
        case UtilityFamily::capped_linear: return "cap:cap=" + format_number(parameter_);
        case UtilityFamily::piecewise_linear: {
            std::string out = "pwl:knots=";
            for (std::size_t i = 0; i < knots_.size(); ++i) {
                if (i) out += ';';
                out += format_number(knots_[i].first) + "," + format_number(knots_[i].second);
            }
            return out;
        }
    }
    return {};
}

UtilityReport check_assumptions(const Utility& u, std::span<const double> probe_grid) {
    UtilityReport report;
    report.upper_bound = u.upper_bound();
    if (probe_grid.empty()) {
        report.tail_ok = false;
        return report;
    }
    double previous = u(probe_grid.front());
    for (std::size_t i = 0; i < probe_grid.size(); ++i) {
        const double x = probe_grid[i];
        const double value = u(x);
        if (i > 0 && value < previous) {
            ++report.monotonicity_violations;
            if (report.first_offenders.size() < 8) report.first_offenders.push_back(x);
        }
        if (value > u.upper_bound()) ++report.above_bound;
        previous = value;
    }
    report.tail_ok = u(probe_grid.front()) <= -1e3;
    return report;
}

std::vector<double> default_probe_grid() {
    std::vector<double> grid;
    for (int k = 6 * 8; k >= 0; --k) grid.push_back(-std::pow(10.0, k / 8.0));
    for (int i = -400; i <= 400; ++i) grid.push_back(i * 0.0025);
    for (int k = 0; k <= 6 * 8; ++k) grid.push_back(std::pow(10.0, k / 8.0));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

bool expected_utility_finite(const ScenarioTree& tree, const Utility& u,
                             std::span<const double> grid) {
    const int T = tree.horizon();
    for (int t = 1; t <= T - 1; ++t) {
        for (double x : grid)
            for (double y : grid)
                for (double w : grid) {
                    double total = 0.0;
                    for (std::size_t leaf : tree.leaves()) {
                        const TreeNode& last = tree.node(leaf);
                        const double pt = tree.node(tree.ancestor_at(leaf, t)).price;
                        total += tree.path_probability(leaf) *
                                 u(x + y * pt + w * last.price - last.endowment.value_or(0.0));
                    }
                    if (!std::isfinite(total)) return false;
                }
    }
    return true;
}

}  // namespace impactdp
