#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace impactdp {

/// Read-only view of market data along one path, indexed like the model:
/// price[0..t], resilience[0..t-1], depth[1..t] (depth[0] is never read).
///
/// A view may describe a prefix of a longer path; `length()` is the last
/// index t for which price and depth are available.
struct PathView {
    double zeta0 = 0.0;
    std::span<const double> price;
    std::span<const double> resilience;
    std::span<const double> depth;

    int length() const { return static_cast<int>(price.size()) - 1; }
};

/// A single deterministic path of midprice, resilience and depth.
///
/// Storage follows the model's indexing so that `price(t)`, `resilience(t)`
/// and `depth(t)` read exactly as the formulas do. `depth(0)` does not exist.
class MarketPath {
public:
    /// price has T+1 entries (t = 0..T), resilience T entries (t = 0..T-1),
    /// depth T entries (t = 1..T). Throws std::invalid_argument when T < 2,
    /// sizes disagree, zeta0 < 0, any resilience < 0 or any depth <= 0.
    MarketPath(double zeta0, std::vector<double> price,
               std::vector<double> resilience, std::vector<double> depth);

    int horizon() const { return horizon_; }
    double zeta0() const { return zeta0_; }
    double price(int t) const;
    double resilience(int t) const;
    double depth(int t) const;
    double min_depth() const;

    /// exp(-sum_{i=j}^{t-1} r_i); 1 when j == t.
    double rho(int j, int t) const;

    PathView view() const;

private:
    double zeta0_;
    int horizon_;
    std::vector<double> price_;
    std::vector<double> resilience_;
    std::vector<double> depth_;  // depth_[0] is a placeholder, never read
    std::vector<double> resilience_prefix_;
    std::vector<double> rho_table_;  // (T+1)^2, filled when T <= kRhoTableLimit

    static constexpr int kRhoTableLimit = 64;
};

/// Trade increments h_1..h_T; h[t-1] is the trade executed at time t.
struct TradeSequence {
    std::vector<double> increments;

    int length() const { return static_cast<int>(increments.size()); }
    double position(int t) const;  // X_t = h_1 + ... + h_t
    bool liquidating(double tolerance = 1e-12) const;
};

/// Sufficient statistic of the trade history: cash, half-spread, position.
struct MarketState {
    double cash = 0.0;
    double spread = 0.0;
    double position = 0.0;
};

struct LambdaBound {
    double value;
    double cap;
};

struct RecursiveWealth {
    double cash;
    std::vector<double> spread_trace;  // zeta_1..zeta_T
};

/// exp(-sum_{i=j}^{t-1} r[i]). Requires 0 <= j <= t <= r.size().
double rho(std::span<const double> resilience, int j, int t);

/// Half-spread after one step: exp(-r_t) * zeta + |trade| / depth_next.
double spread_step(double zeta, double resilience, double depth_next, double trade);

/// Cash after one step, paying the post-trade half-spread on the traded size.
double cash_step(double cash, double price_next, double spread_next, double trade);

/// Applies spread_step then cash_step and moves the position.
MarketState advance(const MarketState& state, double resilience, double depth_next,
                    double price_next, double trade);

/// Cash innovation of the last trade in `trades` (h_1..h_t) given the
/// earlier ones. Requires 1 <= trades.size() <= path.length().
double kappa(const PathView& path, std::span<const double> trades);
double kappa(const MarketPath& path, std::span<const double> trades);

/// History-free upper envelope of kappa at time t: -P h - h^2/delta, capped by
/// P^2 delta / 4.
LambdaBound lambda_bound(double price, double depth, double trade);

/// Closed-form terminal cash xi_T for trades h_1..h_T starting from xi_0 = 0.
double terminal_wealth_explicit(const MarketPath& path, std::span<const double> trades);

/// Same quantity obtained by iterating the spread and cash recursions.
RecursiveWealth terminal_wealth_recursive(const MarketPath& path,
                                          std::span<const double> trades);

}  // namespace impactdp
