#include "doctest.h"

#include "etm/equilibrium.hpp"
#include "etm/sim.hpp"
#include "etm/valuation.hpp"

#include "random_market.hpp"

#include <cmath>

using namespace etm;

namespace {

constexpr int kCases = 200;

using Gen = etm::testing::MarketGen;

} // namespace

TEST_CASE("equilibrium price lies in the band and the market clears") {
    Gen g(1);
    for (int i = 0; i < kCases; ++i) {
        const auto m = g.market();
        const double lambda = g.uniform(0.0, 1.0);
        const auto eq = solve_equilibrium(m, lambda);
        const auto& v = eq.valuation;
        CHECK(eq.price >= v.p_second - 1e-12);
        CHECK(eq.price <= v.p_top + 1e-12);
        CHECK(eq.price == doctest::Approx(v.p_second + lambda * (v.p_top - v.p_second)).epsilon(1e-12));
        double total = 0.0;
        for (const auto& [id, k] : eq.holdings) {
            CHECK(k >= 0.0);
            if (k > 0.0) CHECK(v.top_set.count(id) == 1);
            total += k;
        }
        CHECK(total == doctest::Approx(static_cast<double>(m.tickets)).epsilon(1e-12));

        const auto ints = solve_equilibrium(m, lambda, HoldingsMode::LargestRemainder);
        double int_total = 0.0;
        for (const auto& [id, k] : ints.holdings) {
            CHECK(k == std::floor(k));
            int_total += k;
        }
        CHECK(int_total == static_cast<double>(m.tickets));
    }
}

TEST_CASE("objective is linear in ticket count") {
    Gen g(2);
    for (int i = 0; i < kCases; ++i) {
        const auto m = g.market();
        const auto& b = m.buyers[0];
        const double price = g.uniform(0.0, 3.0);
        const double base = buyer_objective(b, 0, m, price);
        const double slope = buyer_objective(b, 1, m, price) - base;
        const auto k = g.integer(0, m.tickets);
        CHECK(buyer_objective(b, k, m, price) - base == doctest::Approx(static_cast<double>(k) * slope).epsilon(1e-9));
        CHECK(slope == doctest::Approx(net_value(b, m.tickets, price)).epsilon(1e-9));
    }
}

TEST_CASE("best responses: holders weakly gain per ticket, others weakly lose") {
    Gen g(3);
    for (int i = 0; i < kCases; ++i) {
        const auto m = g.market();
        const auto eq = solve_equilibrium(m, g.uniform(0.0, 1.0));
        for (const auto& b : m.buyers) {
            const double marginal = net_value(b, m.tickets, eq.price);
            const double scale = 1e-8 * std::max(1.0, eq.price);
            if (eq.holdings.at(b.id) > 0.0) CHECK(marginal >= -scale);
            else CHECK(marginal <= scale);
        }
    }
}

TEST_CASE("net_value falls with price; max_price falls with r and rises with mu") {
    Gen g(4);
    for (int i = 0; i < kCases; ++i) {
        auto b = g.buyer("x");
        const auto n = g.integer(1, 60);
        double p1 = g.uniform(0.0, 4.0), p2 = g.uniform(0.0, 4.0);
        if (p1 > p2) std::swap(p1, p2);
        CHECK(net_value(b, n, p1) >= net_value(b, n, p2) - 1e-12);

        const double before = max_price(b, n);
        auto costlier = b;
        costlier.cost_of_capital *= g.uniform(1.0, 3.0);
        CHECK(max_price(costlier, n) <= before + 1e-9);

        b.mev = MevModel::point_mass(g.uniform(0.1, 5.0));
        auto richer = b;
        richer.mev = MevModel::point_mass(b.mev.mean() + g.uniform(0.0, 2.0));
        CHECK(max_price(richer, n) >= max_price(b, n) - 1e-9);
    }
}

TEST_CASE("risk-neutral argmax is invariant to scaling every MEV law") {
    Gen g(5);
    for (int i = 0; i < kCases; ++i) {
        auto m = g.market();
        for (auto& b : m.buyers) b.risk = RiskProfile::neutral();
        const double c = g.uniform(0.1, 10.0);
        auto scaled = m;
        for (auto& b : scaled.buyers) b.mev = b.mev.scaled(c);
        const auto a = solve_equilibrium(m);
        const auto s = solve_equilibrium(scaled);
        CHECK(a.valuation.top_set == s.valuation.top_set);
        CHECK(s.price == doctest::Approx(c * a.price).epsilon(1e-9));
        CHECK(s.chi == doctest::Approx(a.chi).epsilon(1e-9));
    }
}

TEST_CASE("simulation is a pure function of its seed") {
    Gen g(6);
    for (int i = 0; i < kCases; ++i) {
        auto m = g.market();
        for (auto& b : m.buyers) b.risk = RiskProfile::neutral();
        const auto eq = solve_equilibrium(m);
        SimOptions o;
        o.slots = 200;
        o.seed = g.rng();
        const auto x = run_slots(m, eq, o);
        const auto y = run_slots(m, eq, o);
        CHECK(x.wins == y.wins);
        CHECK(x.realized_mev_total == y.realized_mev_total);
        CHECK(x.win_delay_histogram == y.win_delay_histogram);
    }
}
