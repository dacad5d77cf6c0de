#pragma once

#include "etm/model.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace etm {

inline constexpr double kTieTolerance = 1e-9;
inline constexpr double kPriceTolerance = 1e-9;
inline constexpr int kMaxBisectionIterations = 200;
inline constexpr double kQuadratureTolerance = 1e-10;
// Unbounded supports are truncated at this upper quantile.
inline constexpr double kTailMass = 1e-12;

struct ValuationResult {
    std::map<std::string, double> per_buyer;
    double p_top = 0.0;
    double p_second = 0.0;
    std::set<std::string> top_set;
    double tie_tolerance = kTieTolerance;
    // Concave buyers with r = 0, valued at ess_sup(R).
    std::set<std::string> boundary_regime;
};

// E[profile(R - price)]. Closed form for RiskNeutral and PointMass, exact
// finite sum for Empirical, adaptive Gauss-Kronrod otherwise.
double expected_gain(const RiskProfile& profile, const MevModel& mev, double price);

// The quadrature route alone; valid for the continuous kinds. Used to cross
// check the closed forms.
double expected_gain_quadrature(const RiskProfile& profile, const MevModel& mev, double price);

// Per-ticket net value (1/N) E[profile(R - P)] - r P.
double net_value(const BuyerSpec& buyer, std::int64_t tickets, double price);

enum class PriceMethod {
    Auto,      // closed forms where available
    Bisection, // always bisect, including risk-neutral buyers
};

// Largest P >= 0 with net_value(P) >= 0.
//   RiskNeutral:            mean / (1 + r N)
//   concave, r > 0:         bisection on [0, E[profile(R)] / (r N)]
//   concave, r = 0:         ess_sup(R); DivergentValuation when unbounded
double max_price(const BuyerSpec& buyer, std::int64_t tickets, PriceMethod method = PriceMethod::Auto);

bool is_boundary_regime(const BuyerSpec& buyer);

// Top price, second price and top set from per-buyer maximal prices.
ValuationResult rank_prices(std::map<std::string, double> per_buyer, double tie_tolerance = kTieTolerance);

// Values every buyer (after PBS reduction when configured) and ranks them.
ValuationResult rank_valuations(const MarketParams& market, double tie_tolerance = kTieTolerance);

} // namespace etm
