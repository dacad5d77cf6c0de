#include "etm/equilibrium.hpp"

#include "etm/error.hpp"
#include "etm/pbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace etm {

namespace {

std::map<std::string, double> split_holdings(const MarketParams& market, const std::set<std::string>& top_set,
                                             HoldingsMode mode) {
    std::map<std::string, double> holdings;
    for (const auto& b : market.buyers) holdings[b.id] = 0.0;

    const auto n = market.tickets;
    const auto m = static_cast<std::int64_t>(top_set.size());
    if (mode == HoldingsMode::EqualSplit) {
        const double share = static_cast<double>(n) / static_cast<double>(m);
        for (const auto& id : top_set) holdings[id] = share;
        return holdings;
    }
    // Equal shares have identical remainders, so largest-remainder reduces to
    // handing the leftover tickets out in id order.
    const std::int64_t base = n / m;
    std::int64_t leftover = n % m;
    for (const auto& id : top_set) {
        holdings[id] = static_cast<double>(base + (leftover > 0 ? 1 : 0));
        if (leftover > 0) --leftover;
    }
    return holdings;
}

} // namespace

double winner_mean_mev(const Equilibrium& eq, const MarketParams& market) {
    const MarketParams eff = effective_market(market);
    double mean = 0.0;
    for (const auto& b : eff.buyers) {
        const auto it = eq.holdings.find(b.id);
        if (it == eq.holdings.end() || it->second == 0.0) continue;
        mean += it->second / static_cast<double>(eff.tickets) * b.mev.mean();
    }
    return mean;
}

double mev_capture(const Equilibrium& eq, const MarketParams& market) {
    const double mean = winner_mean_mev(eq, market);
    if (!(mean > 0.0)) throw Error(ErrorKind::ZeroMevMarket, "winner mean MEV is zero");
    return eq.price / mean;
}

Equilibrium solve_equilibrium(const MarketParams& market, double lambda, HoldingsMode mode) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::ValidationError, "lambda must lie in [0, 1]");
    validate(market);
    const MarketParams eff = effective_market(market);

    Equilibrium eq;
    eq.tickets = eff.tickets;
    eq.valuation = rank_valuations(eff);
    eq.selection_lambda = lambda;
    const auto& val = eq.valuation;
    eq.price = val.p_second + lambda * (val.p_top - val.p_second);
    eq.holdings = split_holdings(eff, val.top_set, mode);
    eq.chi = mev_capture(eq, eff);

    if (val.top_set.size() == eff.buyers.size()) eq.regime_tags.insert("homogeneous");
    for (const auto& id : val.top_set)
        if (val.boundary_regime.count(id)) eq.regime_tags.insert("r0-concave-boundary");
    if (val.top_set.size() == 1 && eff.buyers.size() > 1) eq.regime_tags.insert("centralized");
    return eq;
}

DominanceThreshold investor_threshold(const MarketParams& market, const std::set<std::string>& investor_ids,
                                   double investor_payoff_mean) {
    if (investor_ids.empty()) throw Error(ErrorKind::InvalidPartition, "investor set is empty");
    for (const auto& id : investor_ids) {
        const bool known = std::any_of(market.buyers.begin(), market.buyers.end(),
                                       [&](const BuyerSpec& b) { return b.id == id; });
        if (!known) throw Error(ErrorKind::InvalidPartition, "unknown investor id '" + id + "'");
    }
    if (investor_ids.size() >= market.buyers.size())
        throw Error(ErrorKind::InvalidPartition, "investor set covers every buyer");

    const MarketParams eff = effective_market(market);
    const auto n = static_cast<double>(eff.tickets);
    double min_term = std::numeric_limits<double>::infinity();
    for (const auto& b : eff.buyers) {
        if (investor_ids.count(b.id)) continue;
        const double mean = b.mev.mean();
        if (!(mean > 0.0))
            throw Error(ErrorKind::InvalidPartition, "non-investor '" + b.id + "' has zero mean payoff");
        min_term = std::min(min_term, (1.0 + b.cost_of_capital * n) * investor_payoff_mean / mean - 1.0);
    }
    DominanceThreshold out{min_term / n, true};
    for (const auto& b : eff.buyers)
        if (investor_ids.count(b.id) && !(b.cost_of_capital < out.bound)) out.dominates = false;
    return out;
}

double buyer_objective(const BuyerSpec& buyer, std::int64_t k, const MarketParams& market, double price) {
    const std::int64_t n = market.tickets;
    if (k < 0 || k > n) throw Error(ErrorKind::ValidationError, "ticket count k must lie in [0, N]");
    if (k == 0) return 0.0;
    const double win = static_cast<double>(k) / static_cast<double>(n);
    const double gain_if_selected = expected_gain(buyer.risk, buyer.mev, price);
    const double gain_if_not = buyer.risk(0.0);
    return win * gain_if_selected + (1.0 - win) * gain_if_not -
           buyer.cost_of_capital * price * static_cast<double>(k);
}

} // namespace etm
