#pragma once

#include "etm/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace etm {

// PBS price from the realized abilities of every participant.
//   MaxHaircut: (1 - epsilon) * max, 0 when empty
//   SecondMax:  second-largest entry, 0 with fewer than two entries
double gamma_eval(const GammaRule& rule, std::span<const double> abilities);

struct DerivedPayoff {
    std::string buyer_id;
    // Law of max(gamma, X_b).
    MevModel payoff;
    // P(gamma >= X_b).
    double outsource_probability;
};

// Effective ET payoff of every buyer when holders may sell block construction
// through PBS. All-PointMass inputs are evaluated exactly; otherwise
// pbs.joint_samples joint draws give Empirical laws. Throws MissingPbsConfig.
std::vector<DerivedPayoff> derive_payoffs(const MarketParams& market);

// The no-PBS market whose buyers carry their derived payoff laws.
MarketParams pbs_market(const MarketParams& market);

// pbs_market(market) when PBS is configured, otherwise market unchanged.
MarketParams effective_market(const MarketParams& market);

} // namespace etm
