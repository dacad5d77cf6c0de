#include "etm/sim.hpp"

#include "etm/error.hpp"
#include "etm/pbs.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numeric>
#include <random>

namespace etm {

namespace {

constexpr double kHoldingsTolerance = 1e-9;

std::vector<double> holdings_in_market_order(const MarketParams& market, const Equilibrium& eq) {
    std::vector<double> k(market.buyers.size(), 0.0);
    for (const auto& [id, v] : eq.holdings) {
        if (!(v >= 0.0)) throw Error(ErrorKind::InvalidHoldings, "negative holding for '" + id + "'");
        k[market.index_of(id)] = v;
    }
    const double total = std::accumulate(k.begin(), k.end(), 0.0);
    if (std::abs(total - static_cast<double>(market.tickets)) > kHoldingsTolerance)
        throw Error(ErrorKind::InvalidHoldings,
                    "holdings sum to " + std::to_string(total) + ", expected " + std::to_string(market.tickets));
    return k;
}

} // namespace

SimReport run_slots(const MarketParams& market, const Equilibrium& eq, const SimOptions& options) {
    validate(market);
    if (options.slots < 1) throw Error(ErrorKind::ValidationError, "slots must be positive");
    const std::vector<double> holdings = holdings_in_market_order(market, eq);
    const std::size_t nb = market.buyers.size();
    const bool pbs_mode = market.pbs.has_value();
    const bool keep_trace = options.trace.value_or(options.slots <= kTraceDefaultLimit);
    const double price = eq.price;

    Engine winner_rng = make_engine(options.seed, Stream::Winner);
    Engine mev_rng = make_engine(options.seed, Stream::Mev);
    Engine ability_rng = make_engine(options.seed, Stream::Abilities);
    Engine delay_rng = make_engine(options.seed, Stream::Delay);

    std::discrete_distribution<std::size_t> pick_winner(holdings.begin(), holdings.end());
    std::bernoulli_distribution tagged_wins(1.0 / static_cast<double>(market.tickets));

    SimReport rep;
    rep.slots = options.slots;
    rep.seed = options.seed;
    rep.price = price;
    rep.chi_analytic = eq.chi;
    std::vector<std::uint64_t> wins(nb, 0);
    std::vector<double> pnl(nb, 0.0);
    if (keep_trace) rep.trace.reserve(options.slots);

    std::vector<double> abilities;
    std::vector<double> others;
    std::uint64_t outsourced = 0;
    std::uint64_t tagged_age = 0;

    for (std::uint64_t t = 0; t < options.slots; ++t) {
        const std::size_t w = pick_winner(winner_rng);

        double realized = 0.0;
        bool exercised_self = true;
        if (pbs_mode) {
            const PbsConfig& cfg = *market.pbs;
            abilities.clear();
            for (const auto& b : market.buyers) abilities.push_back(b.mev.sample(ability_rng));
            for (const auto& y : cfg.non_buyer_abilities) abilities.push_back(y.sample(ability_rng));
            double g = 0.0;
            if (cfg.exclude_self) {
                others.assign(abilities.begin(), abilities.end());
                others.erase(others.begin() + static_cast<std::ptrdiff_t>(w));
                g = gamma_eval(cfg.gamma_rule, others);
            } else {
                g = gamma_eval(cfg.gamma_rule, abilities);
            }
            const double x = abilities[w];
            realized = std::max(g, x);
            exercised_self = x >= g;
            if (g >= x) ++outsourced;
        } else {
            realized = market.buyers[w].mev.sample(mev_rng);
        }

        const double slot_pnl = realized - price;
        ++wins[w];
        pnl[w] += slot_pnl;
        rep.realized_mev_total += realized;

        if (keep_trace) {
            SlotOutcome o;
            o.slot = t;
            o.winner_id = market.buyers[w].id;
            o.realized_mev = realized;
            o.pnl = slot_pnl;
            o.portfolio_before = holdings[w] * price;
            o.portfolio_after = (holdings[w] - 1.0) * price + realized;
            o.exercised_self = exercised_self;
            rep.trace.push_back(std::move(o));
        }

        ++tagged_age;
        if (tagged_wins(delay_rng)) {
            ++rep.win_delay_histogram[tagged_age];
            tagged_age = 0;
        }
    }

    rep.protocol_revenue = static_cast<double>(options.slots) * price;
    rep.chi_hat = rep.realized_mev_total > 0.0 ? rep.protocol_revenue / rep.realized_mev_total : 0.0;
    rep.outsource_fraction = pbs_mode ? static_cast<double>(outsourced) / static_cast<double>(options.slots) : 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        rep.wins[market.buyers[b].id] = wins[b];
        rep.per_buyer_pnl[market.buyers[b].id] = pnl[b];
    }
    return rep;
}

std::vector<SimReport> run_slots_batch_serial(const MarketParams& market, const Equilibrium& eq,
                                              std::uint64_t slots, std::span<const std::uint64_t> seeds) {
    std::vector<SimReport> out;
    out.reserve(seeds.size());
    for (auto seed : seeds) out.push_back(run_slots(market, eq, SimOptions{slots, seed, false}));
    return out;
}

std::vector<SimReport> run_slots_batch(const MarketParams& market, const Equilibrium& eq, std::uint64_t slots,
                                       std::span<const std::uint64_t> seeds) {
    // Surface input errors on the calling thread rather than inside the region.
    validate(market);
    holdings_in_market_order(market, eq);

    std::vector<SimReport> out(seeds.size());
    const auto n = static_cast<std::int64_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        out[idx] = run_slots(market, eq, SimOptions{slots, seeds[idx], false});
    }
    return out;
}

double chi_hat_standard_error(const MarketParams& market, const Equilibrium& eq, std::uint64_t slots) {
    const MarketParams eff = effective_market(market);
    const auto n = static_cast<double>(eff.tickets);
    double mean = 0.0;
    double second_moment = 0.0;
    for (const auto& b : eff.buyers) {
        const auto it = eq.holdings.find(b.id);
        if (it == eq.holdings.end()) continue;
        const double w = it->second / n;
        const double m = b.mev.mean();
        mean += w * m;
        second_moment += w * (b.mev.variance() + m * m);
    }
    if (!(mean > 0.0)) throw Error(ErrorKind::ZeroMevMarket, "winner mean MEV is zero");
    const double sd = std::sqrt(std::max(0.0, second_moment - mean * mean));
    return eq.price / mean * sd / mean / std::sqrt(static_cast<double>(slots));
}

DelayStats win_delay_stats(const SimReport& report, std::int64_t tickets) {
    if (tickets < 1) throw Error(ErrorKind::ValidationError, "tickets must be positive");
    std::uint64_t total = 0;
    double weighted = 0.0;
    for (const auto& [delay, count] : report.win_delay_histogram) {
        total += count;
        weighted += static_cast<double>(delay) * static_cast<double>(count);
    }
    if (total < kMinDelayObservations)
        throw Error(ErrorKind::InsufficientData, std::to_string(total) + " completed delays, need " +
                                                     std::to_string(kMinDelayObservations));

    const double n = static_cast<double>(total);
    const double p = 1.0 / static_cast<double>(tickets);
    DelayStats s{};
    s.mean_delay = weighted / n;
    s.standard_error = std::sqrt((1.0 - p) / (p * p) / n);

    if (tickets == 1) {
        // Certain win: the only admissible delay is 1.
        const bool all_one = report.win_delay_histogram.size() == 1 && report.win_delay_histogram.begin()->first == 1;
        s.gof_statistic = all_one ? 0.0 : std::numeric_limits<double>::infinity();
        s.degrees_of_freedom = 0;
        s.p_value = all_one ? 1.0 : 0.0;
        s.pass = all_one;
        return s;
    }

    auto observed = [&](std::uint64_t d) {
        const auto it = report.win_delay_histogram.find(d);
        return it == report.win_delay_histogram.end() ? 0.0 : static_cast<double>(it->second);
    };

    // Buckets 1..K individually, then the pooled tail {d > K}.
    double stat = 0.0;
    double tail_prob = 1.0; // P(D > d) after processing bucket d
    double tail_observed = n;
    std::uint64_t d = 1;
    int buckets = 0;
    for (;; ++d) {
        const double pd = tail_prob * p;
        const double next_tail = tail_prob * (1.0 - p);
        if (n * pd < 5.0 || n * next_tail < 5.0) break;
        const double o = observed(d);
        stat += (o - n * pd) * (o - n * pd) / (n * pd);
        tail_observed -= o;
        tail_prob = next_tail;
        ++buckets;
    }
    const double expected_tail = n * tail_prob;
    stat += (tail_observed - expected_tail) * (tail_observed - expected_tail) / expected_tail;
    ++buckets;

    s.gof_statistic = stat;
    s.degrees_of_freedom = buckets - 1;
    if (s.degrees_of_freedom < 1) {
        s.p_value = 1.0;
    } else {
        boost::math::chi_squared_distribution<double> dist(s.degrees_of_freedom);
        s.p_value = boost::math::cdf(boost::math::complement(dist, stat));
    }
    s.pass = s.p_value >= kDelaySignificance;
    return s;
}

} // namespace etm
