#include "etm/pbs.hpp"

#include "etm/error.hpp"
#include "etm/kernels.hpp"

#include <algorithm>
#include <variant>

namespace etm {

double gamma_eval(const GammaRule& rule, std::span<const double> abilities) {
    if (abilities.empty()) return 0.0;
    switch (rule.kind) {
    case GammaRule::Kind::MaxHaircut:
        return (1.0 - rule.epsilon) * *std::max_element(abilities.begin(), abilities.end());
    case GammaRule::Kind::SecondMax: {
        if (abilities.size() < 2) return 0.0;
        double first = -1.0;
        double second = -1.0;
        for (double a : abilities) {
            if (a > first) {
                second = first;
                first = a;
            } else if (a > second) {
                second = a;
            }
        }
        return second;
    }
    }
    return 0.0;
}

namespace {

bool all_point_mass(std::span<const MevModel> models) {
    return std::all_of(models.begin(), models.end(),
                       [](const MevModel& m) { return std::holds_alternative<PointMass>(m.law()); });
}

const PbsConfig& require_pbs(const MarketParams& market) {
    if (!market.pbs) throw Error(ErrorKind::MissingPbsConfig, "market has no pbs section");
    return *market.pbs;
}

std::vector<DerivedPayoff> derive_exact(const MarketParams& market, const PbsConfig& cfg) {
    std::vector<double> abilities;
    for (const auto& b : market.buyers) abilities.push_back(b.mev.mean());
    for (const auto& y : cfg.non_buyer_abilities) abilities.push_back(y.mean());

    const double full_gamma = gamma_eval(cfg.gamma_rule, abilities);
    std::vector<DerivedPayoff> out;
    for (std::size_t b = 0; b < market.buyers.size(); ++b) {
        double g = full_gamma;
        if (cfg.exclude_self) {
            std::vector<double> others = abilities;
            others.erase(others.begin() + static_cast<std::ptrdiff_t>(b));
            g = gamma_eval(cfg.gamma_rule, others);
        }
        const double x = abilities[b];
        out.push_back({market.buyers[b].id, MevModel::point_mass(std::max(g, x)), g >= x ? 1.0 : 0.0});
    }
    return out;
}

} // namespace

std::vector<DerivedPayoff> derive_payoffs(const MarketParams& market) {
    const PbsConfig& cfg = require_pbs(market);

    std::vector<MevModel> buyer_abilities;
    buyer_abilities.reserve(market.buyers.size());
    for (const auto& b : market.buyers) buyer_abilities.push_back(b.mev);

    if (all_point_mass(buyer_abilities) && all_point_mass(cfg.non_buyer_abilities)) return derive_exact(market, cfg);

    auto draws = kernels::draw_pbs_payoffs(buyer_abilities, cfg.non_buyer_abilities, cfg.gamma_rule,
                                           cfg.exclude_self, cfg.joint_samples, cfg.seed);
    std::vector<DerivedPayoff> out;
    const auto n = static_cast<double>(cfg.joint_samples);
    for (std::size_t b = 0; b < market.buyers.size(); ++b) {
        out.push_back({market.buyers[b].id, MevModel::empirical(std::move(draws.payoffs[b])),
                       static_cast<double>(draws.outsourced[b]) / n});
    }
    return out;
}

MarketParams pbs_market(const MarketParams& market) {
    auto derived = derive_payoffs(market);
    MarketParams reduced = market;
    reduced.pbs.reset();
    for (std::size_t b = 0; b < reduced.buyers.size(); ++b) reduced.buyers[b].mev = derived[b].payoff;
    return reduced;
}

MarketParams effective_market(const MarketParams& market) {
    return market.pbs ? pbs_market(market) : market;
}

} // namespace etm
