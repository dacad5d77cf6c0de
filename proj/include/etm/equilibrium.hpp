#pragma once

#include "etm/model.hpp"
#include "etm/valuation.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace etm {

enum class HoldingsMode {
    EqualSplit,       // N / |top set| each, as reals
    LargestRemainder, // integers summing to N; remainders go to the top set in id order
};

struct Equilibrium {
    std::int64_t tickets = 0;
    double price = 0.0;
    std::map<std::string, double> holdings;
    double chi = 0.0;
    double selection_lambda = 0.0;
    std::set<std::string> regime_tags;
    ValuationResult valuation;
};

// price = p_second + lambda (p_top - p_second); the top set splits all N
// tickets, every other buyer holds none. PBS markets are reduced first.
Equilibrium solve_equilibrium(const MarketParams& market, double lambda = 0.0,
                              HoldingsMode mode = HoldingsMode::EqualSplit);

// Holdings-weighted mean payoff of the slot winner.
double winner_mean_mev(const Equilibrium& eq, const MarketParams& market);

// price / winner_mean_mev. Throws ZeroMevMarket when the winner mean is 0.
double mev_capture(const Equilibrium& eq, const MarketParams& market);

struct DominanceThreshold {
    double bound;
    bool dominates;
};

// Large-investor dominance test: investors with zero extraction ability win
// every ticket when each r_i < bound, where
//   bound = (1/N) min_{b not investor} ((1 + r_b N) E[R_I] / E[R_b] - 1).
// Non-investor means are taken from the effective (PBS-reduced) market.
DominanceThreshold investor_threshold(const MarketParams& market, const std::set<std::string>& investor_ids,
                                   double investor_payoff_mean);

// E[profile(P&L)] - r P k with P&L = I (R - P), I ~ Bernoulli(k / N).
double buyer_objective(const BuyerSpec& buyer, std::int64_t k, const MarketParams& market, double price);

} // namespace etm
