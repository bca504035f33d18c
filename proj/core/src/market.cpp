#include "impactdp/market.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace impactdp {
namespace {

void require(bool condition, const char* message) {
    if (!condition) throw std::invalid_argument(message);
}

}  // namespace

MarketPath::MarketPath(double zeta0, std::vector<double> price,
                       std::vector<double> resilience, std::vector<double> depth)
    : zeta0_(zeta0),
      horizon_(static_cast<int>(price.size()) - 1),
      price_(std::move(price)),
      resilience_(std::move(resilience)) {
    require(horizon_ >= 2, "MarketPath: horizon T must be at least 2");
    require(static_cast<int>(resilience_.size()) == horizon_,
            "MarketPath: resilience needs T entries (t = 0..T-1)");
    require(static_cast<int>(depth.size()) == horizon_,
            "MarketPath: depth needs T entries (t = 1..T)");
    require(zeta0_ >= 0.0 && std::isfinite(zeta0_), "MarketPath: zeta0 must be >= 0");
    for (double r : resilience_) require(r >= 0.0 && std::isfinite(r), "MarketPath: resilience must be >= 0");
    for (double d : depth) require(d > 0.0 && std::isfinite(d), "MarketPath: depth must be > 0");
    for (double p : price_) require(std::isfinite(p), "MarketPath: price must be finite");

    depth_.reserve(depth.size() + 1);
    depth_.push_back(0.0);
    depth_.insert(depth_.end(), depth.begin(), depth.end());

    resilience_prefix_.assign(horizon_ + 1, 0.0);
    for (int i = 0; i < horizon_; ++i)
        resilience_prefix_[i + 1] = resilience_prefix_[i] + resilience_[i];

    if (horizon_ <= kRhoTableLimit) {
        const int n = horizon_ + 1;
        rho_table_.assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int t = 0; t < n; ++t)
            for (int j = 0; j <= t; ++j)
                rho_table_[t * n + j] = std::exp(-(resilience_prefix_[t] - resilience_prefix_[j]));
    }
}

double MarketPath::price(int t) const {
    require(t >= 0 && t <= horizon_, "MarketPath::price: index out of range");
    return price_[t];
}

double MarketPath::resilience(int t) const {
    require(t >= 0 && t < horizon_, "MarketPath::resilience: index out of range");
    return resilience_[t];
}

double MarketPath::depth(int t) const {
    require(t >= 1 && t <= horizon_, "MarketPath::depth: index out of range");
    return depth_[t];
}

double MarketPath::min_depth() const {
    double m = depth_[1];
    for (int t = 2; t <= horizon_; ++t) m = std::min(m, depth_[t]);
    return m;
}

double MarketPath::rho(int j, int t) const {
    require(0 <= j && j <= t && t <= horizon_, "MarketPath::rho: need 0 <= j <= t <= T");
    if (!rho_table_.empty()) return rho_table_[t * (horizon_ + 1) + j];
    return std::exp(-(resilience_prefix_[t] - resilience_prefix_[j]));
}

PathView MarketPath::view() const {
    return PathView{zeta0_, price_, resilience_, depth_};
}

double TradeSequence::position(int t) const {
    require(t >= 0 && t <= length(), "TradeSequence::position: index out of range");
    double x = 0.0;
    for (int i = 0; i < t; ++i) x += increments[i];
    return x;
}

bool TradeSequence::liquidating(double tolerance) const {
    return std::abs(position(length())) <= tolerance;
}

double rho(std::span<const double> resilience, int j, int t) {
    require(0 <= j && j <= t && static_cast<std::size_t>(t) <= resilience.size(),
            "rho: need 0 <= j <= t <= len(r)");
    double sum = 0.0;
    for (int i = j; i < t; ++i) sum += resilience[i];
    return std::exp(-sum);
}

double spread_step(double zeta, double resilience, double depth_next, double trade) {
    require(depth_next > 0.0, "spread_step: depth must be > 0");
    return std::exp(-resilience) * zeta + std::abs(trade) / depth_next;
}

double cash_step(double cash, double price_next, double spread_next, double trade) {
    return cash - price_next * trade - spread_next * std::abs(trade);
}

MarketState advance(const MarketState& state, double resilience, double depth_next,
                    double price_next, double trade) {
    MarketState next;
    next.spread = spread_step(state.spread, resilience, depth_next, trade);
    next.cash = cash_step(state.cash, price_next, next.spread, trade);
    next.position = state.position + trade;
    return next;
}

double kappa(const PathView& path, std::span<const double> trades) {
    const int t = static_cast<int>(trades.size());
    require(t >= 1 && t <= path.length(), "kappa: need 1 <= len(h) <= path length");
    require(path.resilience.size() >= static_cast<std::size_t>(t) &&
                path.depth.size() > static_cast<std::size_t>(t),
            "kappa: path view too short");

    // rho_{j,t} accumulated backwards from j = t.
    double decay_sum = 0.0;
    double impact = 0.0;
    for (int j = t; j >= 1; --j) {
        if (j < t) decay_sum += path.resilience[j];
        impact += std::exp(-decay_sum) / path.depth[j] * std::abs(trades[j - 1]);
    }
    decay_sum += path.resilience[0];
    const double h = trades[t - 1];
    return -path.price[t] * h - std::abs(h) * (std::exp(-decay_sum) * path.zeta0 + impact);
}

double kappa(const MarketPath& path, std::span<const double> trades) {
    const int t = static_cast<int>(trades.size());
    require(t >= 1 && t <= path.horizon(), "kappa: need 1 <= len(h) <= T");
    double impact = 0.0;
    for (int j = 1; j <= t; ++j)
        impact += path.rho(j, t) / path.depth(j) * std::abs(trades[j - 1]);
    const double h = trades[t - 1];
    return -path.price(t) * h - std::abs(h) * (path.rho(0, t) * path.zeta0() + impact);
}

LambdaBound lambda_bound(double price, double depth, double trade) {
    require(depth > 0.0, "lambda_bound: depth must be > 0");
    return {-price * trade - trade * trade / depth, price * price * depth / 4.0};
}

double terminal_wealth_explicit(const MarketPath& path, std::span<const double> trades) {
    const int horizon = path.horizon();
    require(static_cast<int>(trades.size()) == horizon,
            "terminal_wealth_explicit: need exactly T trades");
    double linear = 0.0;
    double friction = 0.0;
    for (int t = 1; t <= horizon; ++t) {
        const double h = trades[t - 1];
        linear += path.price(t) * h;
        double impact = path.rho(0, t) * path.zeta0();
        for (int j = 1; j <= t; ++j)
            impact += path.rho(j, t) / path.depth(j) * std::abs(trades[j - 1]);
        friction += std::abs(h) * impact;
    }
    return -linear - friction;
}

RecursiveWealth terminal_wealth_recursive(const MarketPath& path,
                                          std::span<const double> trades) {
    const int horizon = path.horizon();
    require(static_cast<int>(trades.size()) == horizon,
            "terminal_wealth_recursive: need exactly T trades");
    RecursiveWealth out{0.0, {}};
    out.spread_trace.reserve(horizon);
    MarketState state{0.0, path.zeta0(), 0.0};
    for (int t = 0; t < horizon; ++t) {
        state = advance(state, path.resilience(t), path.depth(t + 1), path.price(t + 1),
                        trades[t]);
        out.spread_trace.push_back(state.spread);
    }
    out.cash = state.cash;
    return out;
}

}  // namespace impactdp
